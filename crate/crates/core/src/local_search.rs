//! Education: first-improvement local search with relocate, swap, 2-opt,
//! 2-opt* and (for clustered instances) cluster reselection, all evaluated
//! under the penalised cost.
//!
//! When the instance has no effective time constraints and no backhauls,
//! moves are priced with exact O(1) distance and load deltas. Otherwise the
//! affected routes are re-simulated.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cost::{count_precedence_violations, simulate_route, CostEvaluator};
use crate::instance::{BackhaulMode, ProblemData};
use crate::rng::Rng;
use crate::solution::{vehicle_slots, Route, Solution};

/// Granular candidate lists: for each client, its nearest other clients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborLists {
    k: usize,
    lists: Vec<Vec<usize>>,
}

impl NeighborLists {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Neighbors of `client`, nearest first. Empty for depots.
    pub fn of(&self, client: usize) -> &[usize] {
        &self.lists[client]
    }
}

/// Nearest `k` clients per client by `dist`, ties broken by lower id.
pub fn build_neighbor_lists(data: &ProblemData, k: usize) -> NeighborLists {
    let k = k.max(1);
    let clients = data.client_ids();
    let mut lists = vec![Vec::new(); data.num_nodes()];
    for &u in &clients {
        let mut others: Vec<usize> = clients.iter().copied().filter(|&v| v != u).collect();
        others.sort_by_key(|&v| (data.dist.get(u, v), v));
        others.truncate(k);
        lists[u] = others;
    }
    NeighborLists { k, lists }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EducateParams {
    pub k_neighbors: usize,
    pub max_rounds: usize,
}

impl Default for EducateParams {
    fn default() -> Self {
        EducateParams {
            k_neighbors: 20,
            max_rounds: 1000,
        }
    }
}

/// Reusable education context for one instance.
pub struct LocalSearch<'a> {
    data: &'a ProblemData,
    neighbors: NeighborLists,
    params: EducateParams,
    fast: bool,
    strict: bool,
    clusters: Vec<Vec<usize>>,
}

impl<'a> LocalSearch<'a> {
    pub fn new(data: &'a ProblemData, params: EducateParams) -> Self {
        let k = params.k_neighbors.min(data.num_clients().saturating_sub(1)).max(1);
        LocalSearch {
            data,
            neighbors: build_neighbor_lists(data, k),
            params,
            fast: !data.time_constrained() && data.backhaul_mode == BackhaulMode::None,
            strict: data.backhaul_mode == BackhaulMode::Strict,
            clusters: data.clusters(),
        }
    }

    pub fn neighbors(&self) -> &NeighborLists {
        &self.neighbors
    }

    /// Improves `solution` until no move lowers the penalised cost or the
    /// round limit is reached. Returns the input unchanged at a local optimum.
    pub fn educate(&self, solution: &Solution, evaluator: &CostEvaluator, rng: &mut Rng) -> Solution {
        let mut state = State::new(self, solution, evaluator);
        let mut order = self.data.client_ids();
        let mut improved_any = false;
        for _ in 0..self.params.max_rounds {
            rng.shuffle(&mut order);
            let mut improved = false;
            for &u in &order {
                if state.improve_client(u) {
                    improved = true;
                }
            }
            if !improved {
                break;
            }
            improved_any = true;
        }
        if !improved_any {
            return solution.clone();
        }
        state.into_solution()
    }
}

/// Convenience wrapper building a [`LocalSearch`] for a single call.
pub fn educate(
    solution: &Solution,
    data: &ProblemData,
    evaluator: &CostEvaluator,
    rng: &mut Rng,
    params: EducateParams,
) -> Solution {
    LocalSearch::new(data, params).educate(solution, evaluator, rng)
}

const NONE: usize = usize::MAX;

#[derive(Clone)]
struct WorkRoute {
    vtype: usize,
    depot: usize,
    visits: Vec<usize>,
    /// `fwd[i]`: distance from the depot through visits[..i] along the route.
    fwd: Vec<i64>,
    /// `bwd[i]`: the same prefix traversed in reverse direction.
    bwd: Vec<i64>,
    /// `load_prefix[i]`: sum of demands of visits[..i].
    load_prefix: Vec<i64>,
    cost: i64,
    distance: i64,
}

struct State<'s, 'a> {
    ls: &'s LocalSearch<'a>,
    eval: &'s CostEvaluator,
    routes: Vec<WorkRoute>,
    /// client -> (route, position)
    pos: Vec<(usize, usize)>,
    /// Empty routes available per vehicle type.
    empties: Vec<BTreeSet<usize>>,
    total_distance: i64,
    scratch_a: Vec<usize>,
    scratch_b: Vec<usize>,
}

impl<'s, 'a> State<'s, 'a> {
    fn new(ls: &'s LocalSearch<'a>, solution: &Solution, eval: &'s CostEvaluator) -> Self {
        let data = ls.data;
        let mut free_slots = vehicle_slots(data);
        let mut routes = Vec::new();
        let blank = |vtype: usize, visits: Vec<usize>| WorkRoute {
            vtype,
            depot: data.vehicle_types[vtype].depot,
            visits,
            fwd: Vec::new(),
            bwd: Vec::new(),
            load_prefix: Vec::new(),
            cost: 0,
            distance: 0,
        };
        for r in solution.routes() {
            if let Some(i) = free_slots.iter().position(|&t| t == r.vehicle_type()) {
                free_slots.remove(i);
            }
            routes.push(blank(r.vehicle_type(), r.visits().to_vec()));
        }
        for vtype in free_slots {
            routes.push(blank(vtype, Vec::new()));
        }
        let mut state = State {
            ls,
            eval,
            routes,
            pos: vec![(NONE, NONE); data.num_nodes()],
            empties: vec![BTreeSet::new(); data.vehicle_types.len()],
            total_distance: 0,
            scratch_a: Vec::new(),
            scratch_b: Vec::new(),
        };
        for r in 0..state.routes.len() {
            state.refresh(r);
        }
        state.total_distance = state.routes.iter().map(|r| r.distance).sum();
        state
    }

    fn into_solution(self) -> Solution {
        let data = self.ls.data;
        let routes = self
            .routes
            .into_iter()
            .filter(|r| !r.visits.is_empty())
            .map(|r| Route::new(data, r.vtype, r.visits).expect("local search keeps ids valid"))
            .collect();
        Solution::from_routes(data, routes)
    }

    fn refresh(&mut self, r: usize) {
        let data = self.ls.data;
        let route = &mut self.routes[r];
        let len = route.visits.len();
        route.fwd.clear();
        route.bwd.clear();
        route.load_prefix.clear();
        route.fwd.push(0);
        route.bwd.push(0);
        route.load_prefix.push(0);
        let mut prev = route.depot;
        for (i, &v) in route.visits.iter().enumerate() {
            route.fwd.push(route.fwd[i] + data.dist.get(prev, v));
            route.bwd.push(route.bwd[i] + data.dist.get(v, prev));
            route.load_prefix.push(route.load_prefix[i] + data.clients[v].demand);
            prev = v;
        }
        for (i, &v) in route.visits.iter().enumerate() {
            self.pos[v] = (r, i);
        }
        if len == 0 {
            self.empties[route.vtype].insert(r);
        } else {
            self.empties[route.vtype].remove(&r);
        }
        if len == 0 {
            route.distance = 0;
            route.cost = 0;
            return;
        }
        let vt = &data.vehicle_types[route.vtype];
        let stats = simulate_route(&route.visits, vt, data).expect("valid ids");
        route.distance = stats.distance;
        route.cost = self.eval.route_cost(&stats);
    }

    fn dist(&self, a: usize, b: usize) -> i64 {
        self.ls.data.dist.get(a, b)
    }

    /// Cost of a route sequence under the fast model.
    fn fast_cost(&self, vtype: usize, distance: i64, load: i64) -> i64 {
        let vt = &self.ls.data.vehicle_types[vtype];
        let excess_load = (load - vt.capacity).max(0);
        let excess_dist = vt.max_distance.map_or(0, |m| (distance - m).max(0));
        distance + self.eval.load_penalties[0] * excess_load + self.eval.dist_penalty * excess_dist
    }

    /// (cost, distance, precedence violations) of a sequence by simulation.
    fn sim_cost(&self, vtype: usize, visits: &[usize]) -> (i64, i64, usize) {
        if visits.is_empty() {
            return (0, 0, 0);
        }
        let data = self.ls.data;
        let stats = simulate_route(visits, &data.vehicle_types[vtype], data).expect("valid ids");
        (self.eval.route_cost(&stats), stats.distance, stats.precedence_violations)
    }

    fn budget_delta(&self, distance_delta: i64) -> i64 {
        let budget = self.ls.data.prize_budget;
        self.eval.budget_penalty(self.total_distance + distance_delta, budget)
            - self.eval.budget_penalty(self.total_distance, budget)
    }

    fn route_precedence(&self, r: usize) -> usize {
        if self.ls.strict {
            count_precedence_violations(&self.routes[r].visits, self.ls.data)
        } else {
            0
        }
    }

    /// Node before position `i` of route `r` (the depot for `i == 0`).
    fn pred(&self, r: usize, i: usize) -> usize {
        if i == 0 {
            self.routes[r].depot
        } else {
            self.routes[r].visits[i - 1]
        }
    }

    /// Node after position `i`, or `NONE` for the end of an open route.
    fn succ(&self, r: usize, i: usize) -> usize {
        let route = &self.routes[r];
        if i + 1 < route.visits.len() {
            route.visits[i + 1]
        } else if self.ls.data.open_routes {
            NONE
        } else {
            route.depot
        }
    }

    fn d(&self, a: usize, b: usize) -> i64 {
        if a == NONE || b == NONE {
            0
        } else {
            self.dist(a, b)
        }
    }

    /// Applies the new sequences, returns true. Callers already checked the
    /// delta is strictly negative.
    fn commit(&mut self, changes: Vec<(usize, Vec<usize>)>) -> bool {
        for (r, visits) in changes {
            self.routes[r].visits = visits;
            self.refresh(r);
        }
        self.total_distance = self.routes.iter().map(|r| r.distance).sum();
        true
    }

    /// Compares two candidate routes against the current ones. Returns the
    /// penalised delta, or `None` when strict precedence would get worse.
    fn delta_two(&self, r1: usize, seq1: &[usize], r2: usize, seq2: &[usize]) -> Option<i64> {
        let (c1, d1, p1) = self.sim_cost(self.routes[r1].vtype, seq1);
        let (c2, d2, p2) = self.sim_cost(self.routes[r2].vtype, seq2);
        if self.ls.strict && p1 + p2 > self.route_precedence(r1) + self.route_precedence(r2) {
            return None;
        }
        let old = self.routes[r1].cost + self.routes[r2].cost;
        let dd = d1 + d2 - self.routes[r1].distance - self.routes[r2].distance;
        Some(c1 + c2 - old + self.budget_delta(dd))
    }

    fn delta_one(&self, r: usize, seq: &[usize]) -> Option<i64> {
        let (c, d, p) = self.sim_cost(self.routes[r].vtype, seq);
        if self.ls.strict && p > self.route_precedence(r) {
            return None;
        }
        Some(c - self.routes[r].cost + self.budget_delta(d - self.routes[r].distance))
    }

    fn improve_client(&mut self, u: usize) -> bool {
        let (ru, _) = self.pos[u];
        if ru == NONE {
            return false;
        }
        let neighbors: Vec<usize> = self.ls.neighbors.of(u).to_vec();
        for v in neighbors {
            if self.pos[v].0 == NONE || self.pos[u].0 == NONE {
                continue;
            }
            if self.relocate(u, v) || self.relocate_front(u, v) || self.swap(u, v) || self.two_opt(u, v) {
                return true;
            }
            if self.reverse_prefix(u, v) {
                return true;
            }
        }
        if self.relocate_to_empty(u) {
            return true;
        }
        if self.ls.data.clients[u].cluster.is_some() && self.cluster_reselect(u) {
            return true;
        }
        false
    }

    /// Moves `u` to directly after `v`.
    fn relocate(&mut self, u: usize, v: usize) -> bool {
        let (ru, iu) = self.pos[u];
        let (rv, iv) = self.pos[v];
        if ru == rv && iu == iv + 1 {
            return false;
        }
        if self.ls.fast {
            let q = self.ls.data.clients[u].demand;
            let pu = self.pred(ru, iu);
            let su = self.succ(ru, iu);
            let remove = self.d(pu, su) - self.d(pu, u) - self.d(u, su);
            let sv = self.succ(rv, iv);
            let insert = self.d(v, u) + self.d(u, sv) - self.d(v, sv);
            let delta = if ru == rv {
                let rt = &self.routes[ru];
                let nd = rt.distance + remove + insert;
                self.fast_cost(rt.vtype, nd, rt.load_prefix[rt.visits.len()]) - rt.cost
                    + self.budget_delta(remove + insert)
            } else {
                let (a, b) = (&self.routes[ru], &self.routes[rv]);
                let na = self.fast_cost(a.vtype, a.distance + remove, a.load_prefix[a.visits.len()] - q);
                let nb = self.fast_cost(b.vtype, b.distance + insert, b.load_prefix[b.visits.len()] + q);
                na + nb - a.cost - b.cost + self.budget_delta(remove + insert)
            };
            if delta >= 0 {
                return false;
            }
        }
        let mut a = std::mem::take(&mut self.scratch_a);
        let mut b = std::mem::take(&mut self.scratch_b);
        a.clear();
        b.clear();
        let changes = if ru == rv {
            a.extend(self.routes[ru].visits.iter().copied().filter(|&x| x != u));
            let at = a.iter().position(|&x| x == v).unwrap() + 1;
            a.insert(at, u);
            let ok = self.ls.fast || self.delta_one(ru, &a).is_some_and(|d| d < 0);
            ok.then(|| vec![(ru, a.clone())])
        } else {
            a.extend(self.routes[ru].visits.iter().copied().filter(|&x| x != u));
            b.extend_from_slice(&self.routes[rv].visits);
            b.insert(iv + 1, u);
            let ok = self.ls.fast || self.delta_two(ru, &a, rv, &b).is_some_and(|d| d < 0);
            ok.then(|| vec![(ru, a.clone()), (rv, b.clone())])
        };
        self.scratch_a = a;
        self.scratch_b = b;
        match changes {
            Some(c) => self.commit(c),
            None => false,
        }
    }

    /// Moves `u` in front of `v` when `v` opens its route.
    fn relocate_front(&mut self, u: usize, v: usize) -> bool {
        let (ru, iu) = self.pos[u];
        let (rv, iv) = self.pos[v];
        if iv != 0 || (ru == rv && iu == 0) {
            return false;
        }
        if ru == rv {
            let mut a: Vec<usize> = self.routes[ru].visits.iter().copied().filter(|&x| x != u).collect();
            a.insert(0, u);
            if !self.delta_one(ru, &a).is_some_and(|d| d < 0) {
                return false;
            }
            return self.commit(vec![(ru, a)]);
        }
        let a: Vec<usize> = self.routes[ru].visits.iter().copied().filter(|&x| x != u).collect();
        let mut b = self.routes[rv].visits.clone();
        b.insert(0, u);
        if !self.delta_two(ru, &a, rv, &b).is_some_and(|d| d < 0) {
            return false;
        }
        self.commit(vec![(ru, a), (rv, b)])
    }

    /// With `u` first on its route, reverses the route up to `v` so the
    /// depot links to `v`.
    fn reverse_prefix(&mut self, u: usize, v: usize) -> bool {
        let (ru, iu) = self.pos[u];
        let (rv, iv) = self.pos[v];
        if ru != rv || iu != 0 || iv == 0 {
            return false;
        }
        let mut a = self.routes[ru].visits.clone();
        a[..=iv].reverse();
        if !self.delta_one(ru, &a).is_some_and(|d| d < 0) {
            return false;
        }
        self.commit(vec![(ru, a)])
    }

    /// Exchanges the positions of `u` and `v`.
    fn swap(&mut self, u: usize, v: usize) -> bool {
        let (ru, iu) = self.pos[u];
        let (rv, iv) = self.pos[v];
        if self.ls.fast {
            let delta = if ru == rv {
                let (lo, hi) = if iu < iv { (iu, iv) } else { (iv, iu) };
                let rt = &self.routes[ru];
                let (x, y) = (rt.visits[lo], rt.visits[hi]);
                let px = self.pred(ru, lo);
                let sy = self.succ(ru, hi);
                let dd = if hi == lo + 1 {
                    self.d(px, y) + self.d(y, x) + self.d(x, sy)
                        - self.d(px, x)
                        - self.d(x, y)
                        - self.d(y, sy)
                } else {
                    let sx = self.succ(ru, lo);
                    let py = self.pred(ru, hi);
                    self.d(px, y) + self.d(y, sx) + self.d(py, x) + self.d(x, sy)
                        - self.d(px, x)
                        - self.d(x, sx)
                        - self.d(py, y)
                        - self.d(y, sy)
                };
                self.fast_cost(rt.vtype, rt.distance + dd, rt.load_prefix[rt.visits.len()]) - rt.cost
                    + self.budget_delta(dd)
            } else {
                let qu = self.ls.data.clients[u].demand;
                let qv = self.ls.data.clients[v].demand;
                let (pu, su) = (self.pred(ru, iu), self.succ(ru, iu));
                let (pv, sv) = (self.pred(rv, iv), self.succ(rv, iv));
                let da = self.d(pu, v) + self.d(v, su) - self.d(pu, u) - self.d(u, su);
                let db = self.d(pv, u) + self.d(u, sv) - self.d(pv, v) - self.d(v, sv);
                let (a, b) = (&self.routes[ru], &self.routes[rv]);
                let na = self.fast_cost(a.vtype, a.distance + da, a.load_prefix[a.visits.len()] - qu + qv);
                let nb = self.fast_cost(b.vtype, b.distance + db, b.load_prefix[b.visits.len()] - qv + qu);
                na + nb - a.cost - b.cost + self.budget_delta(da + db)
            };
            if delta >= 0 {
                return false;
            }
        }
        let changes = if ru == rv {
            let mut a = self.routes[ru].visits.clone();
            a.swap(iu, iv);
            let ok = self.ls.fast || self.delta_one(ru, &a).is_some_and(|d| d < 0);
            ok.then(|| vec![(ru, a)])
        } else {
            let mut a = self.routes[ru].visits.clone();
            let mut b = self.routes[rv].visits.clone();
            a[iu] = v;
            b[iv] = u;
            let ok = self.ls.fast || self.delta_two(ru, &a, rv, &b).is_some_and(|d| d < 0);
            ok.then(|| vec![(ru, a), (rv, b)])
        };
        match changes {
            Some(c) => self.commit(c),
            None => false,
        }
    }

    /// Intra-route 2-opt (reverse the segment after `u` up to `v`) or
    /// inter-route 2-opt* (exchange the tails after `u` and `v`).
    fn two_opt(&mut self, u: usize, v: usize) -> bool {
        let (ru, iu) = self.pos[u];
        let (rv, iv) = self.pos[v];
        if ru == rv {
            if iu >= iv {
                return false;
            }
            // New route: ..., u, v, v-1, ..., u+1, succ(v), ...
            let (i, j) = (iu + 1, iv);
            if i >= j {
                return false;
            }
            if self.ls.fast {
                let rt = &self.routes[ru];
                let sv = self.succ(ru, iv);
                let x = rt.visits[i];
                // distance of segment visits[i..=j] forwards and backwards
                let seg_fwd = rt.fwd[j + 1] - rt.fwd[i + 1];
                let seg_bwd = rt.bwd[j + 1] - rt.bwd[i + 1];
                let dd = self.d(u, v) + seg_bwd + self.d(x, sv) - self.d(u, x) - seg_fwd - self.d(v, sv);
                let delta = self.fast_cost(rt.vtype, rt.distance + dd, rt.load_prefix[rt.visits.len()])
                    - rt.cost
                    + self.budget_delta(dd);
                if delta >= 0 {
                    return false;
                }
            }
            let mut a = self.routes[ru].visits.clone();
            a[i..=j].reverse();
            if !self.ls.fast && !self.delta_one(ru, &a).is_some_and(|d| d < 0) {
                return false;
            }
            return self.commit(vec![(ru, a)]);
        }

        // 2-opt*: ru' = ru[..=iu] + rv[iv+1..], rv' = rv[..=iv] + ru[iu+1..]
        if self.ls.fast {
            let (a, b) = (&self.routes[ru], &self.routes[rv]);
            let (la, lb) = (a.visits.len(), b.visits.len());
            let new_a = a.fwd[iu + 1] + self.tail_from(u, b, iv + 1, a.depot);
            let new_b = b.fwd[iv + 1] + self.tail_from(v, a, iu + 1, b.depot);
            let load_a = a.load_prefix[iu + 1] + b.load_prefix[lb] - b.load_prefix[iv + 1];
            let load_b = b.load_prefix[iv + 1] + a.load_prefix[la] - a.load_prefix[iu + 1];
            let dd = new_a + new_b - a.distance - b.distance;
            let delta = self.fast_cost(a.vtype, new_a, load_a) + self.fast_cost(b.vtype, new_b, load_b)
                - a.cost
                - b.cost
                + self.budget_delta(dd);
            if delta >= 0 {
                return false;
            }
        }
        let (a, b) = (&self.routes[ru], &self.routes[rv]);
        let mut na: Vec<usize> = a.visits[..=iu].to_vec();
        na.extend_from_slice(&b.visits[iv + 1..]);
        let mut nb: Vec<usize> = b.visits[..=iv].to_vec();
        nb.extend_from_slice(&a.visits[iu + 1..]);
        if !self.ls.fast && !self.delta_two(ru, &na, rv, &nb).is_some_and(|d| d < 0) {
            return false;
        }
        self.commit(vec![(ru, na), (rv, nb)])
    }

    /// Distance from `from` through `other.visits[start..]` and back to
    /// `depot` (no return leg on open routes).
    fn tail_from(&self, from: usize, other: &WorkRoute, start: usize, depot: usize) -> i64 {
        let len = other.visits.len();
        let open = self.ls.data.open_routes;
        if start >= len {
            return if open { 0 } else { self.dist(from, depot) };
        }
        let inner = other.fwd[len] - other.fwd[start + 1];
        let back = if open { 0 } else { self.dist(other.visits[len - 1], depot) };
        self.dist(from, other.visits[start]) + inner + back
    }

    /// Moves `u` alone into an unused vehicle, trying each vehicle type.
    fn relocate_to_empty(&mut self, u: usize) -> bool {
        let (ru, iu) = self.pos[u];
        if self.routes[ru].visits.len() == 1 {
            return false;
        }
        let targets: Vec<usize> = self.empties.iter().filter_map(|set| set.first().copied()).collect();
        if targets.is_empty() {
            return false;
        }
        let mut rest = self.routes[ru].visits.clone();
        rest.remove(iu);
        let q = self.ls.data.clients[u].demand;
        let (pu, su) = (self.pred(ru, iu), self.succ(ru, iu));
        let remove = self.d(pu, su) - self.d(pu, u) - self.d(u, su);
        let (rest_cost, rest_dist) = if self.ls.fast {
            let rt = &self.routes[ru];
            let load = rt.load_prefix[rt.visits.len()] - q;
            (self.fast_cost(rt.vtype, rt.distance + remove, load), rt.distance + remove)
        } else {
            let (c, d, p) = self.sim_cost(self.routes[ru].vtype, &rest);
            if self.ls.strict && p > self.route_precedence(ru) {
                return false;
            }
            (c, d)
        };
        for target in targets {
            let vtype = self.routes[target].vtype;
            let (single_cost, single_dist) = if self.ls.fast {
                let depot = self.routes[target].depot;
                let back = if self.ls.data.open_routes { 0 } else { self.dist(u, depot) };
                let nd = self.dist(depot, u) + back;
                (self.fast_cost(vtype, nd, q), nd)
            } else {
                let (c, d, _) = self.sim_cost(vtype, &[u]);
                (c, d)
            };
            let dd = rest_dist + single_dist - self.routes[ru].distance;
            let delta = rest_cost + single_cost - self.routes[ru].cost + self.budget_delta(dd);
            if delta < 0 {
                return self.commit(vec![(ru, rest), (target, vec![u])]);
            }
        }
        false
    }

    /// Replaces `u` in place by another member of its cluster.
    fn cluster_reselect(&mut self, u: usize) -> bool {
        let data = self.ls.data;
        let Some(k) = data.clients[u].cluster else {
            return false;
        };
        let (ru, iu) = self.pos[u];
        let members = self.ls.clusters[k].clone();
        for w in members {
            if w == u || self.pos[w].0 != NONE {
                continue;
            }
            let mut a = self.routes[ru].visits.clone();
            a[iu] = w;
            let prize_delta = prize_if_skipped(data, u) - prize_if_skipped(data, w);
            let Some(delta) = self.delta_one(ru, &a) else {
                continue;
            };
            if delta + prize_delta < 0 {
                self.pos[u] = (NONE, NONE);
                return self.commit(vec![(ru, a)]);
            }
        }
        false
    }
}

fn prize_if_skipped(data: &ProblemData, c: usize) -> i64 {
    let client = &data.clients[c];
    if client.required {
        0
    } else {
        client.prize
    }
}
