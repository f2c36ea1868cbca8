//! Reference checks written directly from the model definitions, without
//! going through the solver's own route simulation. Slow on purpose.

use std::collections::BTreeSet;

use hgs_core::evolved::{encode_solution_simple, simple_structural_distance};
use hgs_core::instance::{BackhaulMode, ProblemData};
use hgs_core::{CostEvaluator, Rng, Solution};
use itertools::Itertools;

/// Optimal tour length over all client orders (depot 0, closed tour).
pub fn tsp_optimum(data: &ProblemData) -> (i64, Vec<usize>) {
    let clients: Vec<usize> = (0..data.num_nodes()).filter(|&i| !data.is_depot(i)).collect();
    let depot = data.depots[0];
    let d = |a: usize, b: usize| data.dist.get(a, b);
    let mut best = (i64::MAX, Vec::new());
    for perm in clients.iter().copied().permutations(clients.len()) {
        let mut cost = 0;
        let mut prev = depot;
        for &v in &perm {
            cost += d(prev, v);
            prev = v;
        }
        cost += d(prev, depot);
        if cost < best.0 {
            best = (cost, perm);
        }
    }
    best
}

/// Checks every constraint of a candidate routing directly: coverage,
/// fleet size, capacity, linehaul/backhaul order, time windows (waiting
/// allowed, no lateness), depot closing time, distance and duration limits.
pub fn is_feasible(data: &ProblemData, routes: &[(usize, Vec<usize>)]) -> bool {
    let n = data.num_nodes();
    let mut seen = vec![0usize; n];
    let mut used = vec![0usize; data.vehicle_types.len()];
    let mut total_distance = 0i64;
    for (vtype, visits) in routes {
        if visits.is_empty() {
            continue;
        }
        let Some(vt) = data.vehicle_types.get(*vtype) else {
            return false;
        };
        used[*vtype] += 1;
        for &v in visits {
            if v >= n || data.is_depot(v) {
                return false;
            }
            seen[v] += 1;
        }

        // Load.
        let deliveries: i64 = visits.iter().map(|&v| data.clients[v].demand).filter(|&q| q > 0).sum();
        let pickups: i64 = visits.iter().map(|&v| data.clients[v].demand).filter(|&q| q < 0).map(|q| -q).sum();
        match data.backhaul_mode {
            BackhaulMode::None => {
                if deliveries > vt.capacity {
                    return false;
                }
            }
            BackhaulMode::Strict => {
                if deliveries > vt.capacity || pickups > vt.capacity {
                    return false;
                }
                let mut in_backhaul = false;
                for &v in visits {
                    let q = data.clients[v].demand;
                    if q < 0 {
                        in_backhaul = true;
                    } else if in_backhaul && q > 0 {
                        return false;
                    }
                }
            }
            BackhaulMode::Mixed => {
                let mut on_board = deliveries;
                if on_board > vt.capacity {
                    return false;
                }
                for &v in visits {
                    on_board -= data.clients[v].demand;
                    if on_board > vt.capacity {
                        return false;
                    }
                }
            }
        }

        // Schedule.
        let [open, close] = data.depot_tw;
        let mut t = open;
        let mut here = vt.depot;
        let mut dist = 0i64;
        for &v in visits {
            let c = &data.clients[v];
            t += data.travel_time.get(here, v);
            dist += data.dist.get(here, v);
            if t > c.tw_late {
                return false;
            }
            if t < c.tw_early {
                t = c.tw_early;
            }
            t += c.service;
            here = v;
        }
        if !data.open_routes {
            t += data.travel_time.get(here, vt.depot);
            dist += data.dist.get(here, vt.depot);
            if t > close {
                return false;
            }
        }
        if vt.max_distance.is_some_and(|m| dist > m) || vt.max_duration.is_some_and(|m| t - open > m) {
            return false;
        }
        total_distance += dist;
    }

    if used.iter().zip(&data.vehicle_types).any(|(&u, vt)| u > vt.count) {
        return false;
    }
    if data.prize_budget.is_some_and(|b| total_distance > b) {
        return false;
    }
    // Coverage.
    let clusters = data.clusters();
    for c in &data.clients {
        if data.is_depot(c.node) {
            continue;
        }
        if seen[c.node] > 1 {
            return false;
        }
        if c.cluster.is_none() && c.required && seen[c.node] != 1 {
            return false;
        }
    }
    for members in clusters.iter().filter(|m| !m.is_empty()) {
        let served: usize = members.iter().map(|&m| seen[m]).sum();
        let required = members.iter().any(|&m| data.clients[m].required);
        if served > 1 || (required && served == 0) {
            return false;
        }
    }
    true
}

/// Second transcription of the stratified parent selector, kept close to
/// its Python listing. Returns indices into `pop`.
pub fn reference_select(pop: &[&Solution], rng: &mut Rng, e: &CostEvaluator) -> (usize, usize) {
    let n = pop.len();
    let costs: Vec<i64> = pop.iter().map(|s| e.penalised_cost(s)).collect();
    let feasible: Vec<bool> = pop.iter().map(|s| s.is_feasible()).collect();
    let mut sorted_indices: Vec<usize> = (0..n).collect();
    sorted_indices.sort_by(|&a, &b| costs[a].cmp(&costs[b]));
    let elite_cut = std::cmp::max(1, n / 6);
    let mid_cut = std::cmp::max(elite_cut + 1, n * 2 / 3);
    let elite: Vec<usize> = sorted_indices[..elite_cut].to_vec();
    let mid: Vec<usize> = sorted_indices[elite_cut..mid_cut.min(n)].to_vec();
    let tail: Vec<usize> = sorted_indices[mid_cut.min(n)..].to_vec();

    let tournament = |indices: &[usize], rng: &mut Rng| -> usize {
        let candidates: Vec<usize> = if indices.len() <= 7 {
            indices.to_vec()
        } else {
            (0..7).map(|_| indices[rng.randint(indices.len())]).collect()
        };
        let mut filtered = vec![];
        for &idx in &candidates {
            if feasible[idx] {
                filtered.push(idx);
            } else if rng.rand() < 0.2 {
                filtered.push(idx);
            }
        }
        if filtered.is_empty() {
            filtered = candidates;
        }
        let mut best = filtered[0];
        for &i in &filtered {
            if costs[i] < costs[best] {
                best = i;
            }
        }
        best
    };

    let p1 = tournament(&elite, rng);
    let rank = sorted_indices.iter().position(|&i| i == p1).unwrap();
    let mut strata: Vec<usize> = if feasible[p1] && rank < elite_cut {
        mid.iter().chain(tail.iter()).copied().collect()
    } else {
        elite.iter().chain(mid.iter()).copied().collect()
    };
    if strata.is_empty() {
        strata = sorted_indices.clone();
    }
    let max_sample = if n > 500 { strata.len().min(20) } else { strata.len().min(30) };
    let mut sampled = vec![];
    let mut seen = BTreeSet::new();
    let mut attempts = 0;
    while sampled.len() < max_sample && attempts < max_sample * 2 {
        let c = strata[rng.randint(strata.len())];
        if c != p1 && !seen.contains(&c) {
            sampled.push(c);
            seen.insert(c);
        }
        attempts += 1;
    }
    if sampled.is_empty() {
        match strata.iter().find(|&&i| i != p1) {
            Some(&i) => sampled.push(i),
            None => sampled.push(strata[0]),
        }
    }
    let p2_costs: Vec<f64> = sampled.iter().map(|&i| costs[i] as f64).collect();
    let lo = p2_costs.iter().cloned().fold(f64::MAX, f64::min);
    let hi0 = p2_costs.iter().cloned().fold(f64::MIN, f64::max);
    let hi = if hi0 > lo { hi0 } else { lo + 1.0 };
    let mut best_score = f64::NEG_INFINITY;
    let mut p2 = None;
    let p1_enc = encode_solution_simple(pop[p1]);
    for &idx in &sampled {
        if idx == p1 {
            continue;
        }
        let cost_score = 1.0 - (costs[idx] as f64 - lo) / (hi - lo);
        let feas = if feasible[idx] { 1.0 } else { 0.0 };
        let mut score = if n > 500 {
            let div = if (costs[idx] as f64 - costs[p1] as f64).abs() > (hi - lo) * 0.1 { 0.5 } else { 0.0 };
            0.6 * cost_score + 0.3 * feas + 0.1 * div
        } else {
            let d = simple_structural_distance(&p1_enc, &encode_solution_simple(pop[idx]));
            0.55 * d + 0.3 * cost_score + 0.15 * feas
        };
        score += (rng.rand() - 0.5) * 0.02;
        if score > best_score {
            best_score = score;
            p2 = Some(idx);
        }
    }
    let p2 = p2.unwrap_or_else(|| tournament(&strata, rng));
    (p1, p2)
}
