use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use hgs_core::evolved::{
    encode_routes, encode_solution_simple, hybrid_select_parents, simple_structural_distance, stratify,
    tournament_select, HybridParams, HybridSelector, StructuralEncoding,
};
use hgs_core::instance::{generate_instance, GeneratorSpec, ProblemData, Variant};
use hgs_core::local_search::{educate, EducateParams};
use hgs_core::solution::make_random;
use hgs_core::{CostEvaluator, Rng, Solution};
use hgs_oracles::reference_select;

fn population(data: &ProblemData, n: usize, seed: u64) -> Vec<Solution> {
    let eval = CostEvaluator::new(vec![50], 5, 5);
    (0..n as u64)
        .map(|i| {
            let mut rng = Rng::new(seed * 10_000 + i);
            let s = make_random(data, &mut rng);
            if i % 3 == 0 {
                educate(&s, data, &eval, &mut rng, EducateParams::default())
            } else {
                s
            }
        })
        .collect()
}

fn cvrp(n: usize, seed: u64) -> ProblemData {
    let mut data = generate_instance(&GeneratorSpec::new(Variant::Cvrp, n, seed)).unwrap();
    // Tight capacity so random solutions mix feasible and infeasible.
    data.vehicle_types[0].capacity = 20;
    data.vehicle_types[0].count = n;
    data
}

#[test]
fn stratify_matches_published_cuts() {
    for (n, sizes) in [(12, (2, 6, 4)), (2, (1, 1, 0)), (600, (100, 300, 200)), (7, (1, 3, 3))] {
        let s = stratify(&vec![1; n]).unwrap();
        assert_eq!((s.elite.len(), s.mid.len(), s.tail.len()), sizes, "n={n}");
    }
}

#[test]
fn stratify_partitions_every_size() {
    for n in 2..200 {
        let costs: Vec<i64> = (0..n).map(|i| ((i * 7919) % 31) as i64).collect();
        let s = stratify(&costs).unwrap();
        assert!(!s.elite.is_empty());
        let mut all: Vec<usize> = s.elite.iter().chain(&s.mid).chain(&s.tail).copied().collect();
        all.sort();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
        let order: Vec<i64> = s.sorted.iter().map(|&i| costs[i]).collect();
        assert!(order.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn tournament_basic_cases() {
    let costs = [50, 10, 30, 20, 40];
    let feasible = [true; 5];
    let mut rng = Rng::new(1);
    assert_eq!(tournament_select(&[3], 7, 0.2, &costs, &feasible, &mut rng), 3);
    assert_eq!(tournament_select(&[0, 1, 2, 3, 4], 7, 0.2, &costs, &feasible, &mut rng), 1);
}

#[test]
fn tournament_all_infeasible_stays_in_indices() {
    let costs: Vec<i64> = (0..20).map(|i| 100 - i).collect();
    let feasible = vec![false; 20];
    let indices = [2, 5, 7, 11, 13, 17, 18, 19, 3];
    for seed in 0..1000 {
        let got = tournament_select(&indices, 7, 0.2, &costs, &feasible, &mut Rng::new(seed));
        assert!(indices.contains(&got));
    }
}

#[test]
fn tournament_draws_replay_by_hand() {
    // Ten indices, t_size 7: seven randint draws, then one rand per
    // infeasible candidate, then the cheapest survivor.
    let costs: Vec<i64> = vec![9, 3, 7, 1, 8, 2, 6, 4, 5, 0];
    let feasible: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
    let indices: Vec<usize> = (0..10).collect();
    for seed in 0..200 {
        let mut replay = Rng::new(seed);
        let drawn: Vec<usize> = (0..7).map(|_| indices[replay.randint(10)]).collect();
        let mut kept: Vec<usize> = Vec::new();
        for &d in &drawn {
            if feasible[d] || replay.rand() < 0.2 {
                kept.push(d);
            }
        }
        if kept.is_empty() {
            kept = drawn.clone();
        }
        let expected = *kept.iter().min_by_key(|&&i| costs[i]).unwrap();
        let got = tournament_select(&indices, 7, 0.2, &costs, &feasible, &mut Rng::new(seed));
        assert_eq!(got, expected, "seed {seed}");
    }
}

#[test]
fn encoding_of_solution_routes() {
    let data = cvrp(4, 1);
    let s = Solution::from_visits(&data, vec![vec![1, 2], vec![3]]).unwrap();
    let e = encode_solution_simple(&s);
    assert_eq!(e.all_clients, BTreeSet::from([1, 2, 3]));
    assert_eq!(e.route_clients, vec![BTreeSet::from([1, 2]), BTreeSet::from([3])]);
    let empty = Solution::from_visits(&data, vec![]).unwrap();
    assert_eq!(encode_solution_simple(&empty), StructuralEncoding::default());
    assert!(!encode_routes(&[vec![0, 4, 0]]).all_clients.contains(&0));
}

#[test]
fn structural_distance_hand_values() {
    let a = encode_routes(&[vec![1, 2]]);
    let b = encode_routes(&[vec![1, 2], vec![3]]);
    let d = simple_structural_distance(&a, &b);
    assert!((d - 0.233_333_333_333_333_3).abs() < 1e-9, "{d}");
    assert_eq!(simple_structural_distance(&a, &a), 0.0);
    let x = encode_routes(&[vec![1], vec![2]]);
    let y = encode_routes(&[vec![3], vec![4]]);
    assert_eq!(simple_structural_distance(&x, &y), 1.0);
    // No routes on one side: only the global term counts.
    let none = StructuralEncoding::default();
    assert_eq!(simple_structural_distance(&a, &none), 1.0);
}

#[test]
fn two_member_population_hand_trace() {
    let data = cvrp(6, 2);
    let cheap = Solution::from_visits(&data, vec![vec![1, 2], vec![3, 4], vec![5, 6]]).unwrap();
    let dear = Solution::from_visits(&data, vec![vec![1, 6], vec![2, 5], vec![3, 4]]).unwrap();
    let e = CostEvaluator::default();
    assert!(cheap.is_feasible() && dear.is_feasible());
    let (pc, pd) = (e.cost(&cheap).unwrap(), e.cost(&dear).unwrap());
    assert_ne!(pc, pd);
    let (lo, hi) = if pc < pd { (&cheap, &dear) } else { (&dear, &cheap) };
    for seed in 0..50 {
        let pop = [lo, hi];
        let (p1, p2) = hybrid_select_parents(&pop, &mut Rng::new(seed), &e, 2).unwrap();
        assert_eq!((p1, p2), (0, 1));
    }
}

#[test]
fn identical_population_still_selects() {
    let data = cvrp(8, 3);
    let s = make_random(&data, &mut Rng::new(1));
    let pop: Vec<&Solution> = (0..10).map(|_| &s).collect();
    let e = CostEvaluator::default();
    for seed in 0..20 {
        let (a, b) = hybrid_select_parents(&pop, &mut Rng::new(seed), &e, 2).unwrap();
        assert!(a < 10 && b < 10);
    }
}

#[test]
fn rejects_small_population_and_other_k() {
    let data = cvrp(4, 1);
    let s = make_random(&data, &mut Rng::new(1));
    let e = CostEvaluator::default();
    assert!(hybrid_select_parents(&[&s], &mut Rng::new(0), &e, 2).is_err());
    assert!(hybrid_select_parents(&[&s, &s], &mut Rng::new(0), &e, 3).is_err());
}

#[test]
fn large_population_never_encodes() {
    let data = cvrp(8, 4);
    let sols = population(&data, 501, 4);
    let pop: Vec<&Solution> = sols.iter().collect();
    let probe = Arc::new(AtomicUsize::new(0));
    let sel = HybridSelector::new(HybridParams::default()).with_probe(probe.clone());
    let e = CostEvaluator::new(vec![50], 5, 5);
    for seed in 0..20 {
        let t = sel.select_traced(&pop, &mut Rng::new(seed), &e, 2).unwrap();
        assert!(t.large);
        assert!(t.sampled.len() <= 20);
    }
    assert_eq!(probe.load(Ordering::Relaxed), 0);
}

#[test]
fn small_population_encodes_lazily_with_cap() {
    let data = cvrp(10, 5);
    let sols = population(&data, 120, 5);
    let pop: Vec<&Solution> = sols.iter().collect();
    let probe = Arc::new(AtomicUsize::new(0));
    let sel = HybridSelector::new(HybridParams::default()).with_probe(probe.clone());
    let e = CostEvaluator::new(vec![50], 5, 5);
    for seed in 0..20 {
        probe.store(0, Ordering::Relaxed);
        let t = sel.select_traced(&pop, &mut Rng::new(seed), &e, 2).unwrap();
        assert!(!t.large);
        assert!(t.sampled.len() <= 30);
        assert!(t.sampled.len() >= 20, "strata of 100 members should fill most of the sample");
        assert_eq!(probe.load(Ordering::Relaxed), 1 + t.sampled.len());
    }
}

#[test]
fn scores_follow_published_weights_within_noise() {
    let e = CostEvaluator::new(vec![50], 5, 5);
    for (n, seed) in [(40usize, 6u64), (501, 7)] {
        let data = cvrp(9, seed);
        let sols = population(&data, n, seed);
        let pop: Vec<&Solution> = sols.iter().collect();
        let costs: Vec<f64> = sols.iter().map(|s| e.penalised_cost(s) as f64).collect();
        for s in 0..10 {
            let t = HybridSelector::default().select_traced(&pop, &mut Rng::new(s), &e, 2).unwrap();
            let lo = t.sampled.iter().map(|&i| costs[i]).fold(f64::MAX, f64::min);
            let hi0 = t.sampled.iter().map(|&i| costs[i]).fold(f64::MIN, f64::max);
            let hi = if hi0 > lo { hi0 } else { lo + 1.0 };
            for &(idx, score) in &t.scores {
                let cost_score = 1.0 - (costs[idx] - lo) / (hi - lo);
                let feas = if sols[idx].is_feasible() { 1.0 } else { 0.0 };
                let clean = if t.large {
                    let div = if (costs[idx] - costs[t.parent1]).abs() > (hi - lo) * 0.1 { 0.5 } else { 0.0 };
                    0.6 * cost_score + 0.3 * feas + 0.1 * div
                } else {
                    let d = simple_structural_distance(
                        &encode_solution_simple(&sols[t.parent1]),
                        &encode_solution_simple(&sols[idx]),
                    );
                    0.55 * d + 0.3 * cost_score + 0.15 * feas
                };
                let noise = score - clean;
                assert!((-0.01..=0.01).contains(&noise), "noise {noise}");
                let bound = if t.large { 1.51 } else { 1.01 };
                assert!((-0.01..=bound).contains(&score));
            }
            if !t.fallback {
                assert_ne!(t.parent1, t.parent2);
            }
        }
    }
}

#[test]
fn agrees_with_reference_transcription() {
    let e = CostEvaluator::new(vec![50], 5, 5);
    for (n, seed) in [(2usize, 1u64), (3, 2), (7, 3), (25, 4), (40, 5), (120, 6), (501, 7)] {
        let data = cvrp(10, seed);
        let sols = population(&data, n, seed);
        let pop: Vec<&Solution> = sols.iter().collect();
        for s in 0..30 {
            let got = hybrid_select_parents(&pop, &mut Rng::new(s), &e, 2).unwrap();
            let want = reference_select(&pop, &mut Rng::new(s), &e);
            assert_eq!(got, want, "n={n} seed={s}");
        }
    }
}

#[test]
fn selection_is_deterministic() {
    let data = cvrp(10, 8);
    let sols = population(&data, 30, 8);
    let pop: Vec<&Solution> = sols.iter().collect();
    let e = CostEvaluator::default();
    for s in 0..10 {
        let a = hybrid_select_parents(&pop, &mut Rng::new(s), &e, 2).unwrap();
        let b = hybrid_select_parents(&pop, &mut Rng::new(s), &e, 2).unwrap();
        assert_eq!(a, b);
    }
}
