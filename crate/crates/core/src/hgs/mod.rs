//! The hybrid genetic search loop.

pub mod crossover;
pub mod operators;
pub mod population;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crossover::srex_crossover;
pub use operators::{
    select_parents_baseline, select_survivors_baseline, update_penalties_baseline, BaselinePenalties,
    BaselineSurvivors, BinaryTournament, FeasibilityFlags, OperatorError, Operators, ParentSelector,
    PenaltyState, PenaltyUpdater, SurvivorSelector,
};
pub use population::{Member, Population};

use crate::cost::CostEvaluator;
use crate::instance::{validate, ProblemData, Violation};
use crate::local_search::{EducateParams, LocalSearch};
use crate::rng::Rng;
use crate::solution::{make_random, Solution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HgsError {
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidInstance(Vec<Violation>),
    #[error("instance has no vehicles")]
    NoVehicle,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveParams {
    pub population_min: usize,
    pub population_max: usize,
    pub elite_fraction: f64,
    pub max_iterations: Option<u64>,
    pub max_seconds: Option<f64>,
    /// Stop after this many iterations without a new best.
    pub no_improvement_limit: Option<u64>,
    /// Restart after this many iterations without a new best.
    pub restart_after: u64,
    /// Share of the population replaced on restart.
    pub restart_fraction: f64,
    pub penalty_window: usize,
    pub target_feasible: f64,
    pub educate: EducateParams,
    pub seed: u64,
    pub record_trace: bool,
    #[serde(skip)]
    pub operators: Operators,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            population_min: 25,
            population_max: 40,
            elite_fraction: 0.16,
            max_iterations: Some(2000),
            max_seconds: None,
            no_improvement_limit: None,
            restart_after: 2000,
            restart_fraction: 0.8,
            penalty_window: 100,
            target_feasible: 0.43,
            educate: EducateParams::default(),
            seed: 0,
            record_trace: true,
            operators: Operators::default(),
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<(), HgsError> {
        let bad = |m: &str| Err(HgsError::InvalidParams(m.to_string()));
        if self.population_min < 2 {
            return bad("population_min must be at least 2");
        }
        if self.population_min > self.population_max {
            return bad("population_min must not exceed population_max");
        }
        if !(0.0..=1.0).contains(&self.elite_fraction) {
            return bad("elite_fraction must lie in [0, 1]");
        }
        if self.max_iterations.is_none() && self.max_seconds.is_none() && self.no_improvement_limit.is_none() {
            return bad("at least one stopping criterion is required");
        }
        if self.max_seconds.is_some_and(|s| !(s > 0.0)) {
            return bad("max_seconds must be positive");
        }
        if self.restart_after == 0 || self.penalty_window == 0 {
            return bad("restart_after and penalty_window must be positive");
        }
        if !(0.0..=1.0).contains(&self.restart_fraction) || !(0.0..=1.0).contains(&self.target_feasible) {
            return bad("fractions must lie in [0, 1]");
        }
        if self.educate.k_neighbors == 0 || self.educate.max_rounds == 0 {
            return bad("educate parameters must be positive");
        }
        Ok(())
    }
}

/// One line of the search trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub best_penalised_cost: i64,
    pub best_cost: Option<i64>,
    pub feasible_count: usize,
    pub penalties: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub best: Solution,
    /// True cost when `feasible`, otherwise the penalised cost under the
    /// final evaluator.
    pub best_cost: i64,
    pub feasible: bool,
    pub iterations: u64,
    pub wall_seconds: f64,
    pub trace: Vec<TraceRecord>,
}

impl SolveResult {
    /// The trace as newline-delimited JSON.
    pub fn trace_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.trace {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}

struct Best {
    feasible: Option<(Solution, i64)>,
    /// Cheapest solution under the evaluator current when it was found.
    any: Option<(Solution, i64)>,
}

impl Best {
    /// Returns true on a new best.
    fn offer(&mut self, s: &Solution, eval: &CostEvaluator) -> bool {
        if s.is_feasible() {
            let cost = eval.cost(s).expect("feasible solution has a cost");
            if self.feasible.as_ref().is_none_or(|(_, c)| cost < *c) {
                self.feasible = Some((s.clone(), cost));
                return true;
            }
            return false;
        }
        let pen = eval.penalised_cost(s);
        let better = self.any.as_ref().is_none_or(|(b, _)| pen < eval.penalised_cost(b));
        if better {
            self.any = Some((s.clone(), pen));
        }
        better && self.feasible.is_none()
    }
}

/// Runs the search with the operators bound in `params`.
pub fn solve(data: &ProblemData, params: &SolveParams) -> Result<SolveResult, HgsError> {
    let issues = validate(data);
    if !issues.is_empty() {
        return Err(HgsError::InvalidInstance(issues));
    }
    if data.num_vehicles() == 0 {
        return Err(HgsError::NoVehicle);
    }
    params.validate()?;

    let start = Instant::now();
    let out_of_time = |start: &Instant| params.max_seconds.is_some_and(|s| start.elapsed().as_secs_f64() >= s);
    let ops = &params.operators;
    let mut rng = Rng::new(params.seed);
    let ls = LocalSearch::new(data, params.educate);
    let mut penalty = PenaltyState::new(&CostEvaluator::initial_for(data), params.penalty_window, params.target_feasible);
    let mut eval = penalty.evaluator();
    let mut best = Best { feasible: None, any: None };
    let mut pop = Population::new(params.elite_fraction);

    let fill = |pop: &mut Population,
                    rng: &mut Rng,
                    eval: &CostEvaluator,
                    penalty: &mut PenaltyState,
                    best: &mut Best,
                    start: &Instant| {
        while pop.len() < params.population_min {
            let s = ls.educate(&make_random(data, rng), eval, rng);
            penalty.record(&FeasibilityFlags::of(&s));
            best.offer(&s, eval);
            pop.add(s, eval);
            if pop.len() >= 2 && out_of_time(start) {
                break;
            }
        }
    };
    fill(&mut pop, &mut rng, &eval, &mut penalty, &mut best, &start);

    let mut trace = Vec::new();
    let mut iteration = 0u64;
    let mut since_improvement = 0u64;
    let mut since_restart = 0u64;
    loop {
        if params.max_iterations.is_some_and(|m| iteration >= m)
            || params.no_improvement_limit.is_some_and(|m| since_improvement >= m)
            || out_of_time(&start)
            || pop.len() < 2
        {
            break;
        }
        let (i, j) = ops.parent.select(&pop, &mut rng, &eval, 2)?;
        let child = srex_crossover(pop.solution(i), pop.solution(j), data, &eval, &mut rng);
        let child = ls.educate(&child, &eval, &mut rng);
        penalty.record(&FeasibilityFlags::of(&child));
        if best.offer(&child, &eval) {
            since_improvement = 0;
            since_restart = 0;
        } else {
            since_improvement += 1;
            since_restart += 1;
        }
        pop.add(child, &eval);
        if pop.len() > params.population_max {
            ops.survivor.select_survivors(&mut pop, params.population_min, &eval);
        }
        if penalty.window_full() {
            penalty = ops.penalty.update(penalty);
            eval = penalty.evaluator();
            pop.reevaluate(&eval);
        }
        iteration += 1;

        if since_restart >= params.restart_after {
            since_restart = 0;
            restart(&mut pop, params.restart_fraction, &eval);
            fill(&mut pop, &mut rng, &eval, &mut penalty, &mut best, &start);
        }

        if params.record_trace {
            let best_pen = pop.best().map_or(i64::MAX, |b| pop.member(b).cost);
            trace.push(TraceRecord {
                iteration,
                best_penalised_cost: best_pen,
                best_cost: best.feasible.as_ref().map(|(_, c)| *c),
                feasible_count: pop.members().iter().filter(|m| m.feasible).count(),
                penalties: penalty.coefficients(),
            });
        }
    }

    let wall_seconds = start.elapsed().as_secs_f64();
    let (best, best_cost, feasible) = match (best.feasible, best.any) {
        (Some((s, c)), _) => (s, c, true),
        (None, Some((s, _))) => {
            let c = eval.penalised_cost(&s);
            (s, c, false)
        }
        (None, None) => unreachable!("the population always holds a solution"),
    };
    Ok(SolveResult {
        best,
        best_cost,
        feasible,
        iterations: iteration,
        wall_seconds,
        trace,
    })
}

/// Keeps the cheapest `1 - fraction` of the population.
fn restart(pop: &mut Population, fraction: f64, eval: &CostEvaluator) {
    let keep = ((pop.len() as f64) * (1.0 - fraction)).round().max(1.0) as usize;
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by_key(|&i| (pop.member(i).cost, i));
    let mut drop: Vec<usize> = order[keep.min(order.len())..].to_vec();
    drop.sort_unstable_by(|a, b| b.cmp(a));
    for i in drop {
        pop.remove(i);
    }
    pop.reevaluate(eval);
}
