//! Route simulation and penalised costs.
//!
//! Time windows are relaxed with time warp: arriving after a deadline costs
//! the lateness and service starts at the deadline. Penalties are linear in
//! the violation magnitude.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{BackhaulMode, ProblemData, VehicleType};
use crate::solution::Solution;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("unknown client id {0}")]
    UnknownClient(usize),
    #[error("solution is infeasible")]
    InfeasibleSolution,
}

/// Statistics of one simulated route.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteStats {
    pub distance: i64,
    /// Depot departure to depot return (or last service end on open routes).
    pub duration: i64,
    /// Peak load carried at any point of the route.
    pub load: i64,
    pub excess_load: i64,
    pub time_warp: i64,
    pub excess_distance: i64,
    pub excess_duration: i64,
    /// Backhaul-to-linehaul adjacencies under strict backhaul.
    pub precedence_violations: usize,
    /// Service start time at each visit.
    pub schedule: Vec<i64>,
}

impl RouteStats {
    pub fn is_feasible(&self) -> bool {
        self.excess_load == 0
            && self.time_warp == 0
            && self.excess_distance == 0
            && self.excess_duration == 0
            && self.precedence_violations == 0
    }
}

/// Simulates `visits` on a vehicle of type `vtype`, starting from its depot
/// at the opening of the depot window.
pub fn simulate_route(
    visits: &[usize],
    vtype: &VehicleType,
    data: &ProblemData,
) -> Result<RouteStats, CostError> {
    let n = data.num_nodes();
    if let Some(&bad) = visits.iter().find(|&&v| v >= n || data.is_depot(v)) {
        return Err(CostError::UnknownClient(bad));
    }
    if visits.is_empty() {
        return Ok(RouteStats::default());
    }

    let depot = vtype.depot;
    let [depot_open, depot_close] = data.depot_tw;
    let mut stats = RouteStats {
        schedule: Vec::with_capacity(visits.len()),
        ..RouteStats::default()
    };

    let mut prev = depot;
    let mut departure = depot_open;
    for &v in visits {
        let c = &data.clients[v];
        stats.distance += data.dist.get(prev, v);
        let arrival = departure + data.travel_time.get(prev, v);
        let mut start = arrival.max(c.tw_early);
        if arrival > c.tw_late {
            stats.time_warp += arrival - c.tw_late;
            start = c.tw_late;
        }
        stats.schedule.push(start);
        departure = start + c.service;
        prev = v;
    }
    let end = if data.open_routes {
        departure
    } else {
        stats.distance += data.dist.get(prev, depot);
        let back = departure + data.travel_time.get(prev, depot);
        if back > depot_close {
            stats.time_warp += back - depot_close;
            depot_close
        } else {
            back
        }
    };
    stats.duration = end - depot_open;

    let capacity = vtype.capacity;
    match data.backhaul_mode {
        BackhaulMode::None | BackhaulMode::Strict => {
            let (mut linehaul, mut backhaul) = (0i64, 0i64);
            for &v in visits {
                let q = data.clients[v].demand;
                if q >= 0 {
                    linehaul += q;
                } else {
                    backhaul -= q;
                }
            }
            stats.load = linehaul.max(backhaul);
            stats.excess_load = (stats.load - capacity).max(0);
            if data.backhaul_mode == BackhaulMode::Strict {
                stats.precedence_violations = count_precedence_violations(visits, data);
            }
        }
        BackhaulMode::Mixed => {
            // Leave fully loaded with this route's deliveries; each visit
            // drops its delivery or adds its pickup.
            let mut load: i64 = visits
                .iter()
                .map(|&v| data.clients[v].demand.max(0))
                .sum();
            stats.load = load;
            stats.excess_load = (load - capacity).max(0);
            for &v in visits {
                load -= data.clients[v].demand;
                stats.load = stats.load.max(load);
                stats.excess_load += (load - capacity).max(0);
            }
        }
    }

    if let Some(max) = vtype.max_distance {
        stats.excess_distance = (stats.distance - max).max(0);
    }
    if let Some(max) = vtype.max_duration {
        stats.excess_duration = (stats.duration - max).max(0);
    }
    Ok(stats)
}

/// Number of backhaul clients immediately followed by a linehaul client.
pub fn count_precedence_violations(visits: &[usize], data: &ProblemData) -> usize {
    visits
        .windows(2)
        .filter(|w| data.clients[w[0]].demand < 0 && data.clients[w[1]].demand > 0)
        .count()
}

/// Penalty coefficients turning constraint violations into cost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostEvaluator {
    pub load_penalties: Vec<i64>,
    pub tw_penalty: i64,
    pub dist_penalty: i64,
}

impl CostEvaluator {
    pub fn new(load_penalties: Vec<i64>, tw_penalty: i64, dist_penalty: i64) -> Self {
        CostEvaluator {
            load_penalties,
            tw_penalty,
            dist_penalty,
        }
    }

    /// Starting coefficients scaled to the instance's distances and demands.
    pub fn initial_for(data: &ProblemData) -> Self {
        let clients = data.client_ids();
        let max_demand = clients
            .iter()
            .map(|&c| data.clients[c].demand.abs())
            .max()
            .unwrap_or(0)
            .max(1);
        let max_dist = data.dist.max_value().max(1);
        let load = (max_dist / max_demand).clamp(1, 1000);
        CostEvaluator::new(vec![load], 6, 6)
    }

    /// `coeff[dimension] * max(0, load - capacity)`.
    pub fn load_penalty(&self, load: i64, capacity: i64, dimension: usize) -> i64 {
        self.load_penalties[dimension] * (load - capacity).max(0)
    }

    pub fn tw_penalty(&self, time_warp: i64) -> i64 {
        self.tw_penalty * time_warp
    }

    pub fn dist_penalty(&self, distance: i64, max_distance: i64) -> i64 {
        self.dist_penalty * (distance - max_distance).max(0)
    }

    /// Distance plus weighted violations of one route. Excess duration is
    /// priced with the distance coefficient.
    pub fn route_cost(&self, stats: &RouteStats) -> i64 {
        stats.distance
            + self.load_penalties[0] * stats.excess_load
            + self.tw_penalty(stats.time_warp)
            + self.dist_penalty * (stats.excess_distance + stats.excess_duration)
    }

    /// Penalty for exceeding the global travel budget, if any.
    pub fn budget_penalty(&self, total_distance: i64, budget: Option<i64>) -> i64 {
        budget.map_or(0, |b| self.dist_penalty(total_distance, b))
    }

    /// Objective plus all priced violations. Equals [`cost`](Self::cost) for
    /// feasible solutions.
    pub fn penalised_cost(&self, solution: &Solution) -> i64 {
        let routes: i64 = solution.routes().iter().map(|r| self.route_cost(r.stats())).sum();
        routes
            + solution.uncollected_prizes()
            + self.budget_penalty(solution.distance(), solution.prize_budget())
    }

    /// Total distance plus uncollected prizes; only defined when feasible.
    pub fn cost(&self, solution: &Solution) -> Result<i64, CostError> {
        if !solution.is_feasible() {
            return Err(CostError::InfeasibleSolution);
        }
        Ok(solution.distance() + solution.uncollected_prizes())
    }
}

impl Default for CostEvaluator {
    fn default() -> Self {
        CostEvaluator::new(vec![20], 6, 6)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::instance::{Client, Matrix, Node};

    /// Depot 0 and clients 1..=k on a line, `step` apart.
    pub(crate) fn line_instance(k: usize, step: i64) -> ProblemData {
        let n = k + 1;
        ProblemData {
            nodes: (0..n)
                .map(|i| Node { id: i, x: i as i64 * step, y: 0, is_depot: i == 0 })
                .collect(),
            clients: (0..n)
                .map(|i| {
                    if i == 0 {
                        Client::depot(0, [0, 1000])
                    } else {
                        Client {
                            node: i,
                            demand: 1,
                            tw_early: 0,
                            tw_late: 1000,
                            service: 0,
                            prize: 0,
                            required: true,
                            cluster: None,
                        }
                    }
                })
                .collect(),
            vehicle_types: vec![VehicleType {
                capacity: 10,
                count: 3,
                depot: 0,
                max_duration: None,
                max_distance: None,
            }],
            dist: Matrix::from_fn(n, |i, j| (i as i64 - j as i64).abs() * step),
            travel_time: Matrix::from_fn(n, |i, j| (i as i64 - j as i64).abs() * step),
            depot_tw: [0, 1000],
            open_routes: false,
            backhaul_mode: BackhaulMode::None,
            prize_budget: None,
            depots: vec![0],
        }
    }

    #[test]
    fn empty_route_is_all_zero() {
        let data = line_instance(3, 4);
        let s = simulate_route(&[], &data.vehicle_types[0], &data).unwrap();
        assert_eq!(s, RouteStats::default());
    }

    #[test]
    fn early_arrival_waits() {
        let mut data = line_instance(1, 4);
        data.clients[1].tw_early = 10;
        data.clients[1].tw_late = 20;
        data.clients[1].service = 2;
        let s = simulate_route(&[1], &data.vehicle_types[0], &data).unwrap();
        assert_eq!(s.schedule, vec![10]);
        assert_eq!(s.time_warp, 0);
        // wait until 10, serve until 12, drive 4 back
        assert_eq!(s.duration, 16);
        assert_eq!(s.distance, 8);
    }

    #[test]
    fn late_arrival_is_warped() {
        let mut data = line_instance(1, 25);
        data.clients[1].tw_late = 20;
        let s = simulate_route(&[1], &data.vehicle_types[0], &data).unwrap();
        assert_eq!(s.time_warp, 5);
        assert_eq!(s.schedule, vec![20]);
    }

    #[test]
    fn depot_return_lateness_counts() {
        let mut data = line_instance(2, 10);
        data.depot_tw = [0, 30];
        data.clients[0].tw_late = 30;
        let s = simulate_route(&[2], &data.vehicle_types[0], &data).unwrap();
        assert_eq!(s.time_warp, 10);
    }

    #[test]
    fn unknown_client_is_an_error() {
        let data = line_instance(2, 1);
        let v = &data.vehicle_types[0];
        assert_eq!(simulate_route(&[7], v, &data), Err(CostError::UnknownClient(7)));
        assert_eq!(simulate_route(&[0], v, &data), Err(CostError::UnknownClient(0)));
    }

    #[test]
    fn open_routes_drop_return_leg() {
        let mut data = line_instance(3, 5);
        data.open_routes = true;
        let s = simulate_route(&[1, 2, 3], &data.vehicle_types[0], &data).unwrap();
        assert_eq!(s.distance, 15);
        assert_eq!(s.duration, 15);
    }

    #[test]
    fn strict_backhaul_counts_breaks() {
        let mut data = line_instance(3, 1);
        data.backhaul_mode = BackhaulMode::Strict;
        data.clients[2].demand = -4;
        let s = simulate_route(&[1, 2, 3], &data.vehicle_types[0], &data).unwrap();
        assert_eq!(s.precedence_violations, 1);
        assert_eq!(s.load, 4);
        let s = simulate_route(&[1, 3, 2], &data.vehicle_types[0], &data).unwrap();
        assert_eq!(s.precedence_violations, 0);
    }

    #[test]
    fn mixed_backhaul_tracks_running_load() {
        let mut data = line_instance(3, 1);
        data.backhaul_mode = BackhaulMode::Mixed;
        data.vehicle_types[0].capacity = 6;
        data.clients[1].demand = 5;
        data.clients[2].demand = -4;
        data.clients[3].demand = -3;
        let v = &data.vehicle_types[0];
        // loads: 5 -> 0 -> 4 -> 7 : one unit over at the end
        let s = simulate_route(&[1, 2, 3], v, &data).unwrap();
        assert_eq!((s.load, s.excess_load), (7, 1));
        // loads: 5 -> 9 -> 4 -> 7 : 3 + 1 over
        let s = simulate_route(&[2, 1, 3], v, &data).unwrap();
        assert_eq!((s.load, s.excess_load), (9, 4));
    }

    #[test]
    fn linear_penalties() {
        let e = CostEvaluator::new(vec![20], 6, 3);
        assert_eq!(e.load_penalty(10, 10, 0), 0);
        assert_eq!(e.load_penalty(12, 10, 0), 40);
        assert_eq!(CostEvaluator::new(vec![0], 0, 0).load_penalty(99, 1, 0), 0);
        assert_eq!(e.tw_penalty(0), 0);
        assert_eq!(e.tw_penalty(7), 42);
        assert_eq!(e.dist_penalty(50, 50), 0);
        assert_eq!(e.dist_penalty(53, 50), 9);
    }

    #[test]
    fn distance_and_duration_limits() {
        let mut data = line_instance(2, 10);
        data.vehicle_types[0].max_distance = Some(30);
        data.vehicle_types[0].max_duration = Some(35);
        let s = simulate_route(&[1, 2], &data.vehicle_types[0], &data).unwrap();
        assert_eq!((s.excess_distance, s.excess_duration), (10, 5));
    }
}
