//! Routes and solutions with cached statistics and feasibility verdicts.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{simulate_route, CostError, CostEvaluator, RouteStats};
use crate::instance::{BackhaulMode, ProblemData};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolutionError {
    #[error("unknown client id {0}")]
    UnknownClient(usize),
    #[error("unknown vehicle type {0}")]
    UnknownVehicleType(usize),
    #[error("solutions belong to different instances")]
    InstanceMismatch,
}

impl From<CostError> for SolutionError {
    fn from(e: CostError) -> Self {
        match e {
            CostError::UnknownClient(c) => SolutionError::UnknownClient(c),
            CostError::InfeasibleSolution => unreachable!("simulation never reports infeasibility"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Route {
    vehicle_type: usize,
    depot: usize,
    visits: Vec<usize>,
    stats: RouteStats,
}

impl Route {
    pub fn new(data: &ProblemData, vehicle_type: usize, visits: Vec<usize>) -> Result<Route, SolutionError> {
        let vtype = data
            .vehicle_types
            .get(vehicle_type)
            .ok_or(SolutionError::UnknownVehicleType(vehicle_type))?;
        let stats = simulate_route(&visits, vtype, data)?;
        Ok(Route {
            vehicle_type,
            depot: vtype.depot,
            visits,
            stats,
        })
    }

    pub fn vehicle_type(&self) -> usize {
        self.vehicle_type
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    pub fn visits(&self) -> &[usize] {
        &self.visits
    }

    pub fn stats(&self) -> &RouteStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }
}

impl PartialEq for Route {
    fn eq(&self, other: &Self) -> bool {
        self.vehicle_type == other.vehicle_type && self.visits == other.visits
    }
}

impl Eq for Route {}

/// One constraint a solution breaks, with its magnitude.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Infeasibility {
    ExcessLoad { route: usize, amount: i64 },
    TimeWarp { route: usize, amount: i64 },
    ExcessDistance { route: usize, amount: i64 },
    ExcessDuration { route: usize, amount: i64 },
    Precedence { route: usize, count: usize },
    MissingClient { client: usize },
    RepeatedClient { client: usize, times: usize },
    ClusterUnserved { cluster: usize },
    ClusterOverserved { cluster: usize, visits: usize },
    BudgetExceeded { amount: i64 },
    FleetExceeded { vehicle_type: usize, used: usize, available: usize },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Infeasibility::*;
        match self {
            ExcessLoad { route, amount } => write!(f, "route {route}: excess_load={amount}"),
            TimeWarp { route, amount } => write!(f, "route {route}: time_warp={amount}"),
            ExcessDistance { route, amount } => write!(f, "route {route}: excess_distance={amount}"),
            ExcessDuration { route, amount } => write!(f, "route {route}: excess_duration={amount}"),
            Precedence { route, count } => write!(f, "route {route}: precedence_violations={count}"),
            MissingClient { client } => write!(f, "client {client} not visited"),
            RepeatedClient { client, times } => write!(f, "client {client} visited {times} times"),
            ClusterUnserved { cluster } => write!(f, "cluster {cluster} not served"),
            ClusterOverserved { cluster, visits } => {
                write!(f, "cluster {cluster} served {visits} times")
            }
            BudgetExceeded { amount } => write!(f, "travel budget exceeded by {amount}"),
            FleetExceeded { vehicle_type, used, available } => {
                write!(f, "vehicle type {vehicle_type}: {used} routes for {available} vehicles")
            }
        }
    }
}

/// A set of routes over one instance. Empty routes are dropped on
/// construction, so two solutions are equal iff their routes are.
#[derive(Debug, Clone)]
pub struct Solution {
    routes: Vec<Route>,
    num_nodes: usize,
    visit_counts: Vec<u32>,
    distance: i64,
    uncollected_prizes: i64,
    prize_budget: Option<i64>,
    global_violations: usize,
    feasible: bool,
    adjacency: Vec<(u32, u32)>,
}

impl PartialEq for Solution {
    fn eq(&self, other: &Self) -> bool {
        self.num_nodes == other.num_nodes && self.routes == other.routes
    }
}

impl Eq for Solution {}

impl Solution {
    /// Builds a solution from `(vehicle_type, visits)` pairs.
    pub fn new(data: &ProblemData, routes: Vec<(usize, Vec<usize>)>) -> Result<Solution, SolutionError> {
        let routes = routes
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(t, v)| Route::new(data, t, v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_routes(data, routes))
    }

    /// Assigns vehicle types in declaration order, spilling over into the
    /// last type when the fleet runs out.
    pub fn from_visits(data: &ProblemData, routes: Vec<Vec<usize>>) -> Result<Solution, SolutionError> {
        if data.vehicle_types.is_empty() {
            return Err(SolutionError::UnknownVehicleType(0));
        }
        let mut slots = vehicle_slots(data).into_iter();
        let last = data.vehicle_types.len() - 1;
        let typed = routes
            .into_iter()
            .filter(|r| !r.is_empty())
            .map(|r| (slots.next().unwrap_or(last), r))
            .collect();
        Solution::new(data, typed)
    }

    pub(crate) fn from_routes(data: &ProblemData, routes: Vec<Route>) -> Solution {
        let routes: Vec<Route> = routes.into_iter().filter(|r| !r.is_empty()).collect();
        let n = data.num_nodes();
        let mut visit_counts = vec![0u32; n];
        for r in &routes {
            for &v in &r.visits {
                visit_counts[v] += 1;
            }
        }
        let distance = routes.iter().map(|r| r.stats.distance).sum();
        let uncollected_prizes = data
            .clients
            .iter()
            .filter(|c| !c.required && !data.is_depot(c.node) && visit_counts[c.node] == 0)
            .map(|c| c.prize)
            .sum();
        let mut adjacency = Vec::with_capacity(n + routes.len());
        for r in &routes {
            let mut prev = r.depot;
            for &v in &r.visits {
                adjacency.push(ordered(prev, v));
                prev = v;
            }
            if !data.open_routes {
                adjacency.push(ordered(prev, r.depot));
            }
        }
        adjacency.sort_unstable();
        adjacency.dedup();

        let mut sol = Solution {
            routes,
            num_nodes: n,
            visit_counts,
            distance,
            uncollected_prizes,
            prize_budget: data.prize_budget,
            global_violations: 0,
            feasible: false,
            adjacency,
        };
        sol.global_violations = sol.global_report(data).len();
        sol.feasible = sol.global_violations == 0 && sol.routes.iter().all(|r| r.stats.is_feasible());
        sol
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn num_routes(&self) -> usize {
        self.routes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn distance(&self) -> i64 {
        self.distance
    }

    pub fn uncollected_prizes(&self) -> i64 {
        self.uncollected_prizes
    }

    pub fn prize_budget(&self) -> Option<i64> {
        self.prize_budget
    }

    pub fn is_visited(&self, client: usize) -> bool {
        self.visit_counts.get(client).is_some_and(|&c| c > 0)
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// Route visit lists, as used in solution dumps and the sandbox protocol.
    pub fn route_visits(&self) -> Vec<Vec<usize>> {
        self.routes.iter().map(|r| r.visits.clone()).collect()
    }

    pub fn total_time_warp(&self) -> i64 {
        self.routes.iter().map(|r| r.stats.time_warp).sum()
    }

    pub fn total_excess_load(&self) -> i64 {
        self.routes.iter().map(|r| r.stats.excess_load).sum()
    }

    pub fn total_excess_distance(&self) -> i64 {
        let budget = self.prize_budget.map_or(0, |b| (self.distance - b).max(0));
        budget
            + self
                .routes
                .iter()
                .map(|r| r.stats.excess_distance + r.stats.excess_duration)
                .sum::<i64>()
    }

    /// Constraints that are not tied to a single route's stats.
    fn global_report(&self, data: &ProblemData) -> Vec<Infeasibility> {
        let mut out = Vec::new();
        let mut cluster_visits: Vec<usize> = Vec::new();
        let mut cluster_required: Vec<bool> = Vec::new();
        for c in data.clients.iter().filter(|c| !data.is_depot(c.node)) {
            let times = self.visit_counts[c.node] as usize;
            if times > 1 {
                out.push(Infeasibility::RepeatedClient { client: c.node, times });
            }
            match c.cluster {
                Some(k) => {
                    if cluster_visits.len() <= k {
                        cluster_visits.resize(k + 1, 0);
                        cluster_required.resize(k + 1, false);
                    }
                    cluster_visits[k] += times;
                    cluster_required[k] |= c.required;
                }
                None if c.required && times == 0 => {
                    out.push(Infeasibility::MissingClient { client: c.node });
                }
                None => {}
            }
        }
        for (k, &visits) in cluster_visits.iter().enumerate() {
            if visits == 0 && cluster_required[k] {
                out.push(Infeasibility::ClusterUnserved { cluster: k });
            } else if visits > 1 {
                out.push(Infeasibility::ClusterOverserved { cluster: k, visits });
            }
        }
        if let Some(b) = data.prize_budget {
            if self.distance > b {
                out.push(Infeasibility::BudgetExceeded { amount: self.distance - b });
            }
        }
        let mut used = vec![0usize; data.vehicle_types.len()];
        for r in &self.routes {
            used[r.vehicle_type] += 1;
        }
        for (k, (&u, vt)) in used.iter().zip(&data.vehicle_types).enumerate() {
            if u > vt.count {
                out.push(Infeasibility::FleetExceeded {
                    vehicle_type: k,
                    used: u,
                    available: vt.count,
                });
            }
        }
        out
    }

    /// Every violated constraint with its magnitude. Empty iff feasible.
    pub fn feasibility_report(&self, data: &ProblemData) -> Vec<Infeasibility> {
        let mut out = Vec::new();
        for (i, r) in self.routes.iter().enumerate() {
            let s = &r.stats;
            if s.excess_load > 0 {
                out.push(Infeasibility::ExcessLoad { route: i, amount: s.excess_load });
            }
            if s.time_warp > 0 {
                out.push(Infeasibility::TimeWarp { route: i, amount: s.time_warp });
            }
            if s.excess_distance > 0 {
                out.push(Infeasibility::ExcessDistance { route: i, amount: s.excess_distance });
            }
            if s.excess_duration > 0 {
                out.push(Infeasibility::ExcessDuration { route: i, amount: s.excess_duration });
            }
            if s.precedence_violations > 0 {
                out.push(Infeasibility::Precedence { route: i, count: s.precedence_violations });
            }
        }
        out.extend(self.global_report(data));
        out
    }

    /// Sorted, de-duplicated undirected adjacencies including depot edges.
    pub fn adjacencies(&self) -> &[(u32, u32)] {
        &self.adjacency
    }

    pub fn dump(&self, evaluator: &CostEvaluator) -> SolutionDump {
        SolutionDump {
            routes: self.route_visits(),
            vehicle_types: self.routes.iter().map(|r| r.vehicle_type).collect(),
            feasible: self.feasible,
            cost: evaluator.cost(self).ok(),
            penalised_cost: evaluator.penalised_cost(self),
            distance: self.distance,
            uncollected_prizes: self.uncollected_prizes,
            stats: self.routes.iter().map(|r| r.stats.clone()).collect(),
        }
    }
}

fn ordered(a: usize, b: usize) -> (u32, u32) {
    if a <= b {
        (a as u32, b as u32)
    } else {
        (b as u32, a as u32)
    }
}

/// JSON form of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDump {
    pub routes: Vec<Vec<usize>>,
    pub vehicle_types: Vec<usize>,
    pub feasible: bool,
    pub cost: Option<i64>,
    pub penalised_cost: i64,
    pub distance: i64,
    pub uncollected_prizes: i64,
    pub stats: Vec<RouteStats>,
}

/// One vehicle-type index per available vehicle, in declaration order.
pub fn vehicle_slots(data: &ProblemData) -> Vec<usize> {
    data.vehicle_types
        .iter()
        .enumerate()
        .flat_map(|(k, v)| std::iter::repeat_n(k, v.count))
        .collect()
}

/// Random solution: required clients (one random member per required
/// cluster) plus each optional client with probability 1/2, shuffled and
/// dealt round-robin over the available vehicles.
pub fn make_random(data: &ProblemData, rng: &mut Rng) -> Solution {
    let mut chosen = Vec::new();
    for c in data.clients.iter() {
        if data.is_depot(c.node) || c.cluster.is_some() {
            continue;
        }
        if c.required || rng.rand() < 0.5 {
            chosen.push(c.node);
        }
    }
    for members in data.clusters() {
        if members.is_empty() {
            continue;
        }
        let required = members.iter().any(|&m| data.clients[m].required);
        if required || rng.rand() < 0.5 {
            chosen.push(members[rng.randint(members.len())]);
        }
    }
    rng.shuffle(&mut chosen);

    let slots = vehicle_slots(data);
    if slots.is_empty() {
        return Solution::from_routes(data, Vec::new());
    }
    let mut routes: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
    for (i, c) in chosen.into_iter().enumerate() {
        routes[i % slots.len()].push(c);
    }
    if data.backhaul_mode == BackhaulMode::Strict {
        for r in &mut routes {
            // Stable partition: linehauls first.
            r.sort_by_key(|&c| data.clients[c].demand < 0);
        }
    }
    let routes = slots
        .into_iter()
        .zip(routes)
        .filter(|(_, r)| !r.is_empty())
        .map(|(t, r)| Route::new(data, t, r).expect("random routes use valid ids"))
        .collect();
    Solution::from_routes(data, routes)
}

/// Broken-pairs distance: the fraction of `a`'s undirected adjacencies
/// (depot edges included) that `b` does not contain.
pub fn diversity_distance(a: &Solution, b: &Solution, data: &ProblemData) -> Result<f64, SolutionError> {
    if a.num_nodes != b.num_nodes || a.num_nodes != data.num_nodes() {
        return Err(SolutionError::InstanceMismatch);
    }
    Ok(broken_pairs(a, b))
}

pub(crate) fn broken_pairs(a: &Solution, b: &Solution) -> f64 {
    let (x, y) = (&a.adjacency, &b.adjacency);
    if x.is_empty() {
        return if y.is_empty() { 0.0 } else { 1.0 };
    }
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (x.len() - shared) as f64 / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorSpec, Variant};
    use std::collections::BTreeSet;

    fn cvrp(n: usize, seed: u64) -> ProblemData {
        generate_instance(&GeneratorSpec::new(Variant::Cvrp, n, seed)).unwrap()
    }

    #[test]
    fn tsp_random_is_single_tour() {
        let data = generate_instance(&GeneratorSpec::new(Variant::Tsp, 5, 1)).unwrap();
        for seed in 0..10 {
            let s = make_random(&data, &mut Rng::new(seed));
            assert_eq!(s.num_routes(), 1);
            let mut v = s.routes()[0].visits().to_vec();
            v.sort_unstable();
            assert_eq!(v, vec![1, 2, 3, 4, 5]);
            assert!(s.is_feasible());
        }
    }

    #[test]
    fn random_is_deterministic_and_varied() {
        let data = cvrp(20, 4);
        let a = make_random(&data, &mut Rng::new(77));
        let b = make_random(&data, &mut Rng::new(77));
        assert_eq!(a, b);
        let distinct: BTreeSet<Vec<Vec<usize>>> = (0..100)
            .map(|s| make_random(&data, &mut Rng::new(s)).route_visits())
            .collect();
        assert!(distinct.len() >= 2);
    }

    #[test]
    fn gvrp_random_serves_each_cluster_once() {
        let data = generate_instance(&GeneratorSpec::new(Variant::Gvrp, 9, 5)).unwrap();
        assert_eq!(data.clusters().len(), 3);
        let s = make_random(&data, &mut Rng::new(3));
        let visits: usize = s.routes().iter().map(|r| r.len()).sum();
        assert_eq!(visits, 3);
        assert!(!s
            .feasibility_report(&data)
            .iter()
            .any(|v| matches!(v, Infeasibility::ClusterUnserved { .. } | Infeasibility::ClusterOverserved { .. })));
    }

    #[test]
    fn overload_is_reported() {
        let mut data = cvrp(4, 1);
        data.vehicle_types[0].capacity = 10;
        for c in 1..=4 {
            data.clients[c].demand = [3, 3, 3, 2][c - 1];
        }
        let s = Solution::from_visits(&data, vec![vec![1, 2, 3, 4]]).unwrap();
        let report = s.feasibility_report(&data);
        assert_eq!(report, vec![Infeasibility::ExcessLoad { route: 0, amount: 1 }]);
        assert!(!s.is_feasible());
        let ok = Solution::from_visits(&data, vec![vec![1, 2, 3], vec![4]]).unwrap();
        assert!(ok.is_feasible());
        assert!(ok.feasibility_report(&data).is_empty());
    }

    #[test]
    fn strict_backhaul_break_is_infeasible() {
        let mut data = generate_instance(&GeneratorSpec::new(Variant::Vrpb, 3, 3)).unwrap();
        data.clients[1].demand = 2;
        data.clients[2].demand = -2;
        data.clients[3].demand = 2;
        let s = Solution::from_visits(&data, vec![vec![1, 2, 3]]).unwrap();
        assert_eq!(s.routes()[0].stats().precedence_violations, 1);
        assert!(!s.is_feasible());
        assert!(s
            .feasibility_report(&data)
            .contains(&Infeasibility::Precedence { route: 0, count: 1 }));
    }

    #[test]
    fn coverage_and_fleet_violations() {
        let mut data = cvrp(4, 2);
        data.vehicle_types[0].count = 1;
        let s = Solution::from_visits(&data, vec![vec![1, 2], vec![2, 3]]).unwrap();
        let report = s.feasibility_report(&data);
        assert!(report.contains(&Infeasibility::RepeatedClient { client: 2, times: 2 }));
        assert!(report.contains(&Infeasibility::MissingClient { client: 4 }));
        assert!(report.contains(&Infeasibility::FleetExceeded { vehicle_type: 0, used: 2, available: 1 }));
    }

    #[test]
    fn empty_routes_are_dropped() {
        let data = cvrp(3, 2);
        let a = Solution::from_visits(&data, vec![vec![1, 2, 3], vec![]]).unwrap();
        let b = Solution::from_visits(&data, vec![vec![1, 2, 3]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_routes(), 1);
    }

    fn brute_adjacencies(routes: &[Vec<usize>]) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for r in routes {
            let mut path = vec![0];
            path.extend(r);
            path.push(0);
            for w in path.windows(2) {
                out.insert((w[0].min(w[1]), w[0].max(w[1])));
            }
        }
        out
    }

    #[test]
    fn broken_pairs_matches_enumeration() {
        let data = cvrp(6, 3);
        let r1 = vec![vec![1, 2, 3, 4, 5, 6]];
        let r2 = vec![vec![1, 3, 5, 2, 6, 4]];
        let a = Solution::from_visits(&data, r1.clone()).unwrap();
        let b = Solution::from_visits(&data, r2.clone()).unwrap();
        let (ea, eb) = (brute_adjacencies(&r1), brute_adjacencies(&r2));
        let expected = ea.difference(&eb).count() as f64 / ea.len() as f64;
        // no shared interior edge; shared depot edge {0,1} only
        assert!((expected - 6.0 / 7.0).abs() < 1e-12);
        let got = diversity_distance(&a, &b, &data).unwrap();
        assert!((got - expected).abs() < 1e-12);
        let back = diversity_distance(&b, &a, &data).unwrap();
        assert!((back - got).abs() < 1e-12);
        assert_eq!(diversity_distance(&a, &a, &data).unwrap(), 0.0);
    }

    #[test]
    fn distance_rejects_foreign_solutions() {
        let small = cvrp(3, 1);
        let big = cvrp(5, 1);
        let a = make_random(&small, &mut Rng::new(1));
        let b = make_random(&big, &mut Rng::new(1));
        assert_eq!(diversity_distance(&a, &b, &small), Err(SolutionError::InstanceMismatch));
    }

    #[test]
    fn feasible_penalised_equals_cost() {
        let mut data = cvrp(12, 8);
        data.vehicle_types[0].count = 12;
        let s = Solution::from_visits(&data, data.client_ids().into_iter().map(|c| vec![c]).collect()).unwrap();
        assert!(s.is_feasible());
        for coeff in [0, 1, 50, 10_000] {
            let e = CostEvaluator::new(vec![coeff], coeff, coeff);
            assert_eq!(e.penalised_cost(&s), e.cost(&s).unwrap());
        }
    }

    #[test]
    fn penalised_cost_sums_components() {
        let mut data = cvrp(3, 1);
        data.vehicle_types[0].capacity = 10;
        data.clients[1].demand = 6;
        data.clients[2].demand = 6;
        data.clients[3].demand = 0;
        let s = Solution::from_visits(&data, vec![vec![1, 2, 3]]).unwrap();
        let d = s.distance();
        let e = CostEvaluator::new(vec![20], 0, 0);
        assert_eq!(e.penalised_cost(&s), d + 40);
        assert_eq!(e.cost(&s), Err(CostError::InfeasibleSolution));
    }

    #[test]
    fn skipped_optional_prize_is_charged() {
        let data = generate_instance(&GeneratorSpec::new(Variant::Pcvrptw, 4, 2)).unwrap();
        let visited = vec![vec![1, 2, 3]];
        let s = Solution::from_visits(&data, visited).unwrap();
        assert_eq!(s.uncollected_prizes(), data.clients[4].prize);
        let e = CostEvaluator::new(vec![0], 0, 0);
        assert_eq!(e.penalised_cost(&s), s.distance() + data.clients[4].prize);
    }
}
