//! The hybrid adaptive stratified diversity-pressure parent selector,
//! ported line by line from its published Python listing, with every
//! constant exposed through [`HybridParams`].

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cost::CostEvaluator;
use crate::hgs::{OperatorError, ParentSelector, Population};
use crate::rng::Rng;
use crate::solution::Solution;

/// Client sets of a solution: all clients, then one set per route.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StructuralEncoding {
    pub all_clients: BTreeSet<usize>,
    pub route_clients: Vec<BTreeSet<usize>>,
}

/// Cost-ranked strata of population indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strata {
    pub sorted: Vec<usize>,
    pub elite_cut: usize,
    pub mid_cut: usize,
    pub elite: Vec<usize>,
    pub mid: Vec<usize>,
    pub tail: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridParams {
    pub t_size: usize,
    pub allow_infeasible_prob: f64,
    /// Populations strictly larger than this skip structural scoring.
    pub large_threshold: usize,
    pub sample_cap_large: usize,
    pub sample_cap_small: usize,
    pub w_struct: f64,
    pub w_cost: f64,
    pub w_feas: f64,
    pub large_w_cost: f64,
    pub large_w_feas: f64,
    pub large_w_div: f64,
    pub diversity_bonus: f64,
    /// Cost gap, as a share of the candidate cost range, that earns the
    /// diversity bonus.
    pub diversity_gap: f64,
    pub noise: f64,
}

impl Default for HybridParams {
    fn default() -> Self {
        HybridParams {
            t_size: 7,
            allow_infeasible_prob: 0.2,
            large_threshold: 500,
            sample_cap_large: 20,
            sample_cap_small: 30,
            w_struct: 0.55,
            w_cost: 0.3,
            w_feas: 0.15,
            large_w_cost: 0.6,
            large_w_feas: 0.3,
            large_w_div: 0.1,
            diversity_bonus: 0.5,
            diversity_gap: 0.1,
            noise: 0.02,
        }
    }
}

/// Sorts indices by cost (stable, so ties keep index order) and cuts the
/// elite, mid and tail strata.
pub fn stratify(costs: &[i64]) -> Result<Strata, OperatorError> {
    let n = costs.len();
    if n < 2 {
        return Err(OperatorError::PopulationTooSmall(n));
    }
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by_key(|&i| costs[i]);
    let elite_cut = (n / 6).max(1);
    let mid_cut = (elite_cut + 1).max(n * 2 / 3);
    let elite = sorted[..elite_cut].to_vec();
    let mid = sorted[elite_cut..mid_cut.min(n)].to_vec();
    let tail = sorted[mid_cut.min(n)..].to_vec();
    Ok(Strata {
        sorted,
        elite_cut,
        mid_cut,
        elite,
        mid,
        tail,
    })
}

/// Feasibility-biased tournament returning the cheapest surviving index.
pub fn tournament_select(
    indices: &[usize],
    t_size: usize,
    allow_infeasible_prob: f64,
    costs: &[i64],
    feasible: &[bool],
    rng: &mut Rng,
) -> usize {
    assert!(!indices.is_empty(), "tournament over an empty index list");
    let candidates: Vec<usize> = if indices.len() <= t_size {
        indices.to_vec()
    } else {
        (0..t_size).map(|_| indices[rng.randint(indices.len())]).collect()
    };
    let mut filtered = Vec::with_capacity(candidates.len());
    for &idx in &candidates {
        if feasible[idx] || rng.rand() < allow_infeasible_prob {
            filtered.push(idx);
        }
    }
    if filtered.is_empty() {
        filtered = candidates;
    }
    // `min` keeps the first of equal keys.
    let mut best = filtered[0];
    for &i in &filtered[1..] {
        if costs[i] < costs[best] {
            best = i;
        }
    }
    best
}

/// Encodes raw route arrays; ids of 0 are treated as the depot and skipped.
pub fn encode_routes(routes: &[Vec<usize>]) -> StructuralEncoding {
    let mut enc = StructuralEncoding::default();
    for route in routes {
        let clients: BTreeSet<usize> = route.iter().copied().filter(|&v| v > 0).collect();
        enc.all_clients.extend(clients.iter().copied());
        enc.route_clients.push(clients);
    }
    enc
}

pub fn encode_solution_simple(solution: &Solution) -> StructuralEncoding {
    encode_routes(&solution.route_visits())
}

fn jaccard_parts(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> (usize, usize) {
    let inter = a.intersection(b).count();
    (inter, a.len() + b.len() - inter)
}

/// `1 - (0.7 * global Jaccard + 0.3 * mean paired-route Jaccard)`.
pub fn simple_structural_distance(enc1: &StructuralEncoding, enc2: &StructuralEncoding) -> f64 {
    if enc1.all_clients.is_empty() && enc2.all_clients.is_empty() {
        return 0.0;
    }
    let (inter, union) = jaccard_parts(&enc1.all_clients, &enc2.all_clients);
    if union == 0 {
        return 0.0;
    }
    let global = inter as f64 / union as f64;
    let min_routes = enc1.route_clients.len().min(enc2.route_clients.len());
    if min_routes == 0 {
        return 1.0 - global;
    }
    let mut overlaps = Vec::new();
    for i in 0..min_routes {
        let (a, b) = (&enc1.route_clients[i], &enc2.route_clients[i]);
        if a.is_empty() && b.is_empty() {
            continue;
        }
        let (ri, ru) = jaccard_parts(a, b);
        if ru > 0 {
            overlaps.push(ri as f64 / ru as f64);
        }
    }
    let avg = if overlaps.is_empty() {
        0.0
    } else {
        overlaps.iter().sum::<f64>() / overlaps.len() as f64
    };
    1.0 - (0.7 * global + 0.3 * avg)
}

/// Intermediate choices of one selection call.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub parent1: usize,
    pub parent2: usize,
    pub parent2_strata: Vec<usize>,
    pub sampled: Vec<usize>,
    /// `(candidate, score)` in evaluation order, noise included.
    pub scores: Vec<(usize, f64)>,
    pub large: bool,
    /// True when parent2 came from the closing tournament.
    pub fallback: bool,
}

/// The evolved selector with tunable constants and an optional probe that
/// counts structural encodings.
#[derive(Debug, Clone, Default)]
pub struct HybridSelector {
    pub params: HybridParams,
    name: Option<String>,
    probe: Option<Arc<AtomicUsize>>,
}

impl HybridSelector {
    pub fn new(params: HybridParams) -> Self {
        HybridSelector {
            params,
            name: None,
            probe: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Attaches a counter incremented on every `encode_solution_simple` call.
    pub fn with_probe(mut self, probe: Arc<AtomicUsize>) -> Self {
        self.probe = Some(probe);
        self
    }

    fn encode(&self, s: &Solution) -> StructuralEncoding {
        if let Some(p) = &self.probe {
            p.fetch_add(1, Ordering::Relaxed);
        }
        encode_solution_simple(s)
    }

    /// Runs the selector on a slice of solutions. Returns indices.
    pub fn select_from(
        &self,
        population: &[&Solution],
        rng: &mut Rng,
        evaluator: &CostEvaluator,
        k: usize,
    ) -> Result<(usize, usize), OperatorError> {
        let t = self.select_traced(population, rng, evaluator, k)?;
        Ok((t.parent1, t.parent2))
    }

    /// Like [`HybridSelector::select_from`], also reporting the intermediate
    /// choices.
    pub fn select_traced(
        &self,
        population: &[&Solution],
        rng: &mut Rng,
        evaluator: &CostEvaluator,
        k: usize,
    ) -> Result<SelectionTrace, OperatorError> {
        let p = &self.params;
        let n = population.len();
        if n < 2 {
            return Err(OperatorError::PopulationTooSmall(n));
        }
        if k != 2 {
            return Err(OperatorError::UnsupportedK(k));
        }
        let costs: Vec<i64> = population.iter().map(|s| evaluator.penalised_cost(s)).collect();
        let feasible: Vec<bool> = population.iter().map(|s| s.is_feasible()).collect();
        let strata = stratify(&costs)?;
        let tourney = |idx: &[usize], rng: &mut Rng| {
            tournament_select(idx, p.t_size, p.allow_infeasible_prob, &costs, &feasible, rng)
        };

        let parent1 = tourney(&strata.elite, rng);
        let parent1_feas = feasible[parent1];
        let p1_rank = strata.sorted.iter().position(|&i| i == parent1).expect("parent1 is ranked");

        let mut parent2_strata: Vec<usize> = if parent1_feas && p1_rank < strata.elite_cut {
            strata.mid.iter().chain(&strata.tail).copied().collect()
        } else {
            strata.elite.iter().chain(&strata.mid).copied().collect()
        };
        if parent2_strata.is_empty() {
            parent2_strata = strata.sorted.clone();
        }

        let large = n > p.large_threshold;
        let cap = if large { p.sample_cap_large } else { p.sample_cap_small };
        let max_sample = cap.min(parent2_strata.len());
        let mut sampled = Vec::with_capacity(max_sample);
        let mut seen = BTreeSet::new();
        let mut attempts = 0;
        while sampled.len() < max_sample && attempts < max_sample * 2 {
            let cand = parent2_strata[rng.randint(parent2_strata.len())];
            if cand != parent1 && seen.insert(cand) {
                sampled.push(cand);
            }
            attempts += 1;
        }
        if sampled.is_empty() {
            match parent2_strata.iter().find(|&&i| i != parent1) {
                Some(&i) => sampled.push(i),
                None => sampled.push(parent2_strata[0]),
            }
        }

        let p2_costs: Vec<f64> = sampled.iter().map(|&i| costs[i] as f64).collect();
        let p2_min = p2_costs.iter().copied().fold(f64::INFINITY, f64::min);
        let raw_max = p2_costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let p2_max = if raw_max > p2_min { raw_max } else { p2_min + 1.0 };
        let range = p2_max - p2_min;

        let mut best_score = f64::NEG_INFINITY;
        let mut parent2: Option<usize> = None;
        let mut scores = Vec::with_capacity(sampled.len());
        if large {
            for &idx in &sampled {
                if idx == parent1 {
                    continue;
                }
                let cost_score = 1.0 - (costs[idx] as f64 - p2_min) / range;
                let feas_bonus = if feasible[idx] { 1.0 } else { 0.0 };
                let gap = (costs[idx] as f64 - costs[parent1] as f64).abs();
                let div_bonus = if gap > range * p.diversity_gap { p.diversity_bonus } else { 0.0 };
                let mut score = p.large_w_cost * cost_score + p.large_w_feas * feas_bonus + p.large_w_div * div_bonus;
                score += (rng.rand() - 0.5) * p.noise;
                scores.push((idx, score));
                if score > best_score {
                    best_score = score;
                    parent2 = Some(idx);
                }
            }
        } else {
            let p1_enc = self.encode(population[parent1]);
            for &idx in &sampled {
                if idx == parent1 {
                    continue;
                }
                let enc = self.encode(population[idx]);
                let struct_dist = simple_structural_distance(&p1_enc, &enc);
                let cost_score = 1.0 - (costs[idx] as f64 - p2_min) / range;
                let feas_bonus = if feasible[idx] { 1.0 } else { 0.0 };
                let mut score = p.w_struct * struct_dist + p.w_cost * cost_score + p.w_feas * feas_bonus;
                score += (rng.rand() - 0.5) * p.noise;
                scores.push((idx, score));
                if score > best_score {
                    best_score = score;
                    parent2 = Some(idx);
                }
            }
        }
        let fallback = parent2.is_none();
        let parent2 = match parent2 {
            Some(i) => i,
            None => tourney(&parent2_strata, rng),
        };
        Ok(SelectionTrace {
            parent1,
            parent2,
            parent2_strata,
            sampled,
            scores,
            large,
            fallback,
        })
    }
}

impl ParentSelector for HybridSelector {
    fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("hybrid")
    }

    fn select(
        &self,
        population: &Population,
        rng: &mut Rng,
        evaluator: &CostEvaluator,
        k: usize,
    ) -> Result<(usize, usize), OperatorError> {
        let sols: Vec<&Solution> = population.solutions().collect();
        self.select_from(&sols, rng, evaluator, k)
    }
}

/// The published selector with its published constants.
pub fn hybrid_select_parents(
    population: &[&Solution],
    rng: &mut Rng,
    evaluator: &CostEvaluator,
    k: usize,
) -> Result<(usize, usize), OperatorError> {
    HybridSelector::default().select_from(population, rng, evaluator, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn strata_sizes() {
        let s = stratify(&[5; 12]).unwrap();
        assert_eq!((s.elite.len(), s.mid.len(), s.tail.len()), (2, 6, 4));
        let s = stratify(&[3, 1]).unwrap();
        assert_eq!((s.elite_cut, s.mid_cut), (1, 2));
        assert_eq!((s.elite, s.mid, s.tail), (vec![1], vec![0], vec![]));
        let s = stratify(&vec![0; 600]).unwrap();
        assert_eq!((s.elite.len(), s.mid.len(), s.tail.len()), (100, 300, 200));
        assert!(stratify(&[1]).is_err());
    }

    #[test]
    fn stable_ties_keep_index_order() {
        let s = stratify(&[2, 1, 2, 1]).unwrap();
        assert_eq!(s.sorted, vec![1, 3, 0, 2]);
    }

    #[test]
    fn encoding_drops_depot() {
        let e = encode_routes(&[vec![0, 1, 2, 0], vec![3]]);
        assert_eq!(e.all_clients, set(&[1, 2, 3]));
        assert_eq!(e.route_clients, vec![set(&[1, 2]), set(&[3])]);
        assert_eq!(encode_routes(&[]), StructuralEncoding::default());
    }

    #[test]
    fn distance_examples() {
        let a = encode_routes(&[vec![1, 2]]);
        let b = encode_routes(&[vec![1, 2], vec![3]]);
        let expected = 1.0 - (0.7 * 2.0 / 3.0 + 0.3 * 1.0);
        assert!((simple_structural_distance(&a, &b) - expected).abs() < 1e-12);
        assert_eq!(simple_structural_distance(&a, &a), 0.0);
        let c = encode_routes(&[vec![4, 5]]);
        assert_eq!(simple_structural_distance(&a, &c), 1.0);
    }
}
