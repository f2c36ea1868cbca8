//! Selective route exchange (SREX) with greedy repair, plus an order
//! crossover used when the fleet has a single vehicle.

use crate::cost::{simulate_route, CostEvaluator};
use crate::instance::{BackhaulMode, ProblemData};
use crate::rng::Rng;
use crate::solution::{vehicle_slots, Route, Solution};

/// Recombines two parents into one offspring that keeps the coverage
/// invariants: each required client once, each required cluster once,
/// optional clients at most once.
pub fn srex_crossover(
    parent1: &Solution,
    parent2: &Solution,
    data: &ProblemData,
    evaluator: &CostEvaluator,
    rng: &mut Rng,
) -> Solution {
    if parent1 == parent2 {
        return parent1.clone();
    }
    if data.num_vehicles() <= 1 {
        return order_crossover(parent1, parent2, data, evaluator, rng);
    }
    let r1 = angle_sorted(parent1, data);
    let r2 = angle_sorted(parent2, data);
    if r1.is_empty() || r2.is_empty() {
        let base = if r1.is_empty() { parent2 } else { parent1 };
        let routes: Vec<(usize, Vec<usize>)> =
            base.routes().iter().map(|r| (r.vehicle_type(), r.visits().to_vec())).collect();
        return repair(routes, data, evaluator, rng);
    }
    let (n1, n2) = (r1.len(), r2.len());
    // Moving every route would just copy parent2, so at most min - 1 unless
    // one parent has a single route.
    let cap = n1.min(n2).saturating_sub(1).max(1);
    let moved = 1 + rng.randint(cap);
    let start1 = rng.randint(n1);
    let angle1 = route_angle(&parent1.routes()[r1[start1]], data);
    let start2 = (0..n2)
        .min_by(|&a, &b| {
            let da = angle_gap(route_angle(&parent2.routes()[r2[a]], data), angle1);
            let db = angle_gap(route_angle(&parent2.routes()[r2[b]], data), angle1);
            da.total_cmp(&db)
        })
        .unwrap();

    let from1: Vec<usize> = (0..moved.min(n1)).map(|k| r1[(start1 + k) % n1]).collect();
    let from2: Vec<usize> = (0..moved.min(n2)).map(|k| r2[(start2 + k) % n2]).collect();

    let n = data.num_nodes();
    let mut in_kept = vec![false; n];
    let mut kept: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, r) in parent1.routes().iter().enumerate() {
        if from1.contains(&i) {
            continue;
        }
        for &v in r.visits() {
            in_kept[v] = true;
        }
        kept.push((r.vehicle_type(), r.visits().to_vec()));
    }
    let mut cluster_served = vec![false; data.clusters().len()];
    for (v, &k) in in_kept.iter().enumerate() {
        if k {
            if let Some(c) = data.clients[v].cluster {
                cluster_served[c] = true;
            }
        }
    }
    let mut slots = vehicle_slots(data);
    for (t, _) in &kept {
        if let Some(i) = slots.iter().position(|s| s == t) {
            slots.remove(i);
        }
    }
    let mut routes = kept;
    for &j in &from2 {
        let r = &parent2.routes()[j];
        let mut visits = Vec::with_capacity(r.len());
        for &v in r.visits() {
            if in_kept[v] {
                continue;
            }
            if let Some(c) = data.clients[v].cluster {
                if cluster_served[c] {
                    continue;
                }
                cluster_served[c] = true;
            }
            in_kept[v] = true;
            visits.push(v);
        }
        if visits.is_empty() {
            continue;
        }
        let vtype = match slots.iter().position(|&s| s == r.vehicle_type()) {
            Some(i) => slots.remove(i),
            None if !slots.is_empty() => slots.remove(0),
            None => {
                // No vehicle left: release the clients to the repair step.
                for v in visits {
                    in_kept[v] = false;
                    if let Some(c) = data.clients[v].cluster {
                        cluster_served[c] = false;
                    }
                }
                continue;
            }
        };
        routes.push((vtype, visits));
    }
    repair(routes, data, evaluator, rng)
}

/// Keeps a random slice of parent1's tour and fills the rest in parent2's
/// order.
fn order_crossover(
    parent1: &Solution,
    parent2: &Solution,
    data: &ProblemData,
    evaluator: &CostEvaluator,
    rng: &mut Rng,
) -> Solution {
    let tour1: Vec<usize> = parent1.routes().iter().flat_map(|r| r.visits().iter().copied()).collect();
    let tour2: Vec<usize> = parent2.routes().iter().flat_map(|r| r.visits().iter().copied()).collect();
    let vtype = parent1
        .routes()
        .first()
        .or(parent2.routes().first())
        .map_or(0, |r| r.vehicle_type());
    let n = data.num_nodes();
    let mut used = vec![false; n];
    let mut cluster_served = vec![false; data.clusters().len()];
    let mut child = Vec::with_capacity(tour1.len().max(tour2.len()));
    if !tour1.is_empty() {
        let len = tour1.len();
        let a = rng.randint(len);
        let b = rng.randint(len);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for &v in &tour1[lo..=hi] {
            used[v] = true;
            if let Some(c) = data.clients[v].cluster {
                cluster_served[c] = true;
            }
            child.push(v);
        }
    }
    for &v in &tour2 {
        if used[v] {
            continue;
        }
        if let Some(c) = data.clients[v].cluster {
            if cluster_served[c] {
                continue;
            }
            cluster_served[c] = true;
        }
        used[v] = true;
        child.push(v);
    }
    repair(vec![(vtype, child)], data, evaluator, rng)
}

/// Polar angle of a route's client centroid around its depot.
fn route_angle(route: &Route, data: &ProblemData) -> f64 {
    let depot = &data.nodes[route.depot()];
    let k = route.len().max(1) as f64;
    let (sx, sy) = route.visits().iter().fold((0.0, 0.0), |(x, y), &v| {
        (x + data.nodes[v].x as f64, y + data.nodes[v].y as f64)
    });
    (sy / k - depot.y as f64).atan2(sx / k - depot.x as f64)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % std::f64::consts::TAU;
    d.min(std::f64::consts::TAU - d)
}

/// Route indices sorted by angle, ties by index.
fn angle_sorted(solution: &Solution, data: &ProblemData) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..solution.num_routes()).collect();
    let angles: Vec<f64> = solution.routes().iter().map(|r| route_angle(r, data)).collect();
    idx.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]).then(a.cmp(&b)));
    idx
}

/// Inserts missing required clients (and one member of each unserved
/// required cluster) at their cheapest position, then optional clients
/// whose insertion costs less than their prize.
pub fn repair(
    mut routes: Vec<(usize, Vec<usize>)>,
    data: &ProblemData,
    evaluator: &CostEvaluator,
    rng: &mut Rng,
) -> Solution {
    let n = data.num_nodes();
    let mut visited = vec![false; n];
    for (_, r) in &routes {
        for &v in r {
            visited[v] = true;
        }
    }
    let clusters = data.clusters();
    let mut cluster_served = vec![false; clusters.len()];
    for (v, &vis) in visited.iter().enumerate() {
        if vis {
            if let Some(c) = data.clients[v].cluster {
                cluster_served[c] = true;
            }
        }
    }

    let mut required = Vec::new();
    let mut optional = Vec::new();
    for c in &data.clients {
        if data.is_depot(c.node) || visited[c.node] {
            continue;
        }
        match c.cluster {
            Some(k) => {
                if cluster_served[k] {
                    continue;
                }
                let req = clusters[k].iter().any(|&m| data.clients[m].required);
                // One representative per cluster: its first member.
                if clusters[k].first() == Some(&c.node) {
                    if req {
                        required.push(c.node);
                    } else {
                        optional.push(c.node);
                    }
                }
            }
            None if c.required => required.push(c.node),
            None => optional.push(c.node),
        }
    }
    rng.shuffle(&mut required);
    rng.shuffle(&mut optional);

    let mut slots = vehicle_slots(data);
    for (t, _) in &routes {
        if let Some(i) = slots.iter().position(|s| s == t) {
            slots.remove(i);
        }
    }
    let mut inserter = Inserter::new(data, evaluator, &routes);
    for c in required {
        let (delta, place) = inserter.best_insertion(c, &routes, &slots);
        let _ = delta;
        inserter.apply(c, place, &mut routes, &mut slots);
    }
    for c in optional {
        let (delta, place) = inserter.best_insertion(c, &routes, &slots);
        if delta < data.clients[c].prize {
            inserter.apply(c, place, &mut routes, &mut slots);
        }
    }
    let built = routes
        .into_iter()
        .filter(|(_, r)| !r.is_empty())
        .map(|(t, r)| Route::new(data, t, r).expect("repair keeps ids valid"))
        .collect();
    Solution::from_routes(data, built)
}

#[derive(Debug, Clone, Copy)]
enum Place {
    Existing { route: usize, pos: usize },
    NewRoute { vtype: usize },
}

struct Inserter<'a> {
    data: &'a ProblemData,
    eval: &'a CostEvaluator,
    costs: Vec<i64>,
    distances: Vec<i64>,
}

impl<'a> Inserter<'a> {
    fn new(data: &'a ProblemData, eval: &'a CostEvaluator, routes: &[(usize, Vec<usize>)]) -> Self {
        let mut me = Inserter {
            data,
            eval,
            costs: Vec::new(),
            distances: Vec::new(),
        };
        for (t, r) in routes {
            let (c, d) = me.price(*t, r);
            me.costs.push(c);
            me.distances.push(d);
        }
        me
    }

    fn price(&self, vtype: usize, visits: &[usize]) -> (i64, i64) {
        if visits.is_empty() {
            return (0, 0);
        }
        let stats = simulate_route(visits, &self.data.vehicle_types[vtype], self.data).expect("valid ids");
        (self.eval.route_cost(&stats), stats.distance)
    }

    fn total_distance(&self) -> i64 {
        self.distances.iter().sum()
    }

    fn budget_delta(&self, dd: i64) -> i64 {
        let total = self.total_distance();
        let b = self.data.prize_budget;
        self.eval.budget_penalty(total + dd, b) - self.eval.budget_penalty(total, b)
    }

    /// Cheapest position for `c`; strict backhaul routes only consider
    /// positions that keep linehauls before backhauls.
    fn best_insertion(&self, c: usize, routes: &[(usize, Vec<usize>)], slots: &[usize]) -> (i64, Place) {
        let strict = self.data.backhaul_mode == BackhaulMode::Strict;
        let is_back = self.data.clients[c].demand < 0;
        let mut best: Option<(i64, Place)> = None;
        let mut buf = Vec::new();
        for (ri, (t, r)) in routes.iter().enumerate() {
            for pos in 0..=r.len() {
                if strict {
                    let before_ok = r[..pos].iter().all(|&v| !(self.data.clients[v].demand < 0) || is_back);
                    let after_ok = r[pos..].iter().all(|&v| self.data.clients[v].demand < 0 || !is_back);
                    if !(before_ok && after_ok) {
                        continue;
                    }
                }
                buf.clear();
                buf.extend_from_slice(&r[..pos]);
                buf.push(c);
                buf.extend_from_slice(&r[pos..]);
                let (cost, dist) = self.price(*t, &buf);
                let delta = cost - self.costs[ri] + self.budget_delta(dist - self.distances[ri]);
                if best.is_none_or(|(b, _)| delta < b) {
                    best = Some((delta, Place::Existing { route: ri, pos }));
                }
            }
        }
        let mut tried = Vec::new();
        for &vtype in slots {
            if tried.contains(&vtype) {
                continue;
            }
            tried.push(vtype);
            let (cost, dist) = self.price(vtype, &[c]);
            let delta = cost + self.budget_delta(dist);
            if best.is_none_or(|(b, _)| delta < b) {
                best = Some((delta, Place::NewRoute { vtype }));
            }
        }
        best.unwrap_or_else(|| {
            // No route and no free vehicle: fall back to the last vehicle
            // type, which shows up as a fleet violation.
            (i64::MAX, Place::NewRoute { vtype: self.data.vehicle_types.len() - 1 })
        })
    }

    fn apply(&mut self, c: usize, place: Place, routes: &mut Vec<(usize, Vec<usize>)>, slots: &mut Vec<usize>) {
        match place {
            Place::Existing { route, pos } => {
                routes[route].1.insert(pos, c);
                let (cost, dist) = self.price(routes[route].0, &routes[route].1);
                self.costs[route] = cost;
                self.distances[route] = dist;
            }
            Place::NewRoute { vtype } => {
                if let Some(i) = slots.iter().position(|&s| s == vtype) {
                    slots.remove(i);
                }
                routes.push((vtype, vec![c]));
                let (cost, dist) = self.price(vtype, &[c]);
                self.costs.push(cost);
                self.distances.push(dist);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorSpec, Variant};
    use crate::solution::make_random;

    fn covers_required(s: &Solution, data: &ProblemData) -> bool {
        s.feasibility_report(data).iter().all(|v| {
            !matches!(
                v,
                crate::solution::Infeasibility::MissingClient { .. }
                    | crate::solution::Infeasibility::RepeatedClient { .. }
                    | crate::solution::Infeasibility::ClusterUnserved { .. }
                    | crate::solution::Infeasibility::ClusterOverserved { .. }
            )
        })
    }

    #[test]
    fn identical_parents_give_parent() {
        let data = generate_instance(&GeneratorSpec::new(Variant::Cvrp, 20, 1)).unwrap();
        let p = make_random(&data, &mut Rng::new(1));
        let e = CostEvaluator::default();
        assert_eq!(srex_crossover(&p, &p, &data, &e, &mut Rng::new(3)), p);
    }

    #[test]
    fn offspring_keep_coverage_for_every_variant() {
        for v in Variant::ALL {
            let data = generate_instance(&GeneratorSpec::new(v, 25, 2)).unwrap();
            let e = CostEvaluator::initial_for(&data);
            for seed in 0..20 {
                let a = make_random(&data, &mut Rng::new(seed));
                let b = make_random(&data, &mut Rng::new(seed + 100));
                let child = srex_crossover(&a, &b, &data, &e, &mut Rng::new(seed));
                assert!(covers_required(&child, &data), "{v} seed {seed}: {:?}", child.feasibility_report(&data));
            }
        }
    }

    #[test]
    fn tsp_offspring_is_a_tour() {
        let data = generate_instance(&GeneratorSpec::new(Variant::Tsp, 12, 5)).unwrap();
        let e = CostEvaluator::default();
        let a = make_random(&data, &mut Rng::new(1));
        let b = make_random(&data, &mut Rng::new(2));
        let child = srex_crossover(&a, &b, &data, &e, &mut Rng::new(7));
        assert_eq!(child.num_routes(), 1);
        let mut visits = child.routes()[0].visits().to_vec();
        visits.sort();
        assert_eq!(visits, data.client_ids());
    }
}
