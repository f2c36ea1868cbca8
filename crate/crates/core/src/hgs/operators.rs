//! Plug-point traits for the three evolvable operators and their baseline
//! implementations.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::population::Population;
use crate::cost::CostEvaluator;
use crate::rng::Rng;
use crate::solution::Solution;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperatorError {
    #[error("population too small: need at least 2 members, got {0}")]
    PopulationTooSmall(usize),
    #[error("only k=2 is supported, got k={0}")]
    UnsupportedK(usize),
    #[error("operator failed: {0}")]
    Failed(String),
}

/// Chooses two parents for crossover. Returns indices into the population.
pub trait ParentSelector: Send + Sync {
    fn name(&self) -> &str;

    fn select(
        &self,
        population: &Population,
        rng: &mut Rng,
        evaluator: &CostEvaluator,
        k: usize,
    ) -> Result<(usize, usize), OperatorError>;

    /// Same as [`ParentSelector::select`] but returns the solutions.
    fn select_solutions(
        &self,
        population: &Population,
        rng: &mut Rng,
        evaluator: &CostEvaluator,
        k: usize,
    ) -> Result<(Solution, Solution), OperatorError> {
        let (a, b) = self.select(population, rng, evaluator, k)?;
        Ok((population.solution(a).clone(), population.solution(b).clone()))
    }
}

/// Shrinks an oversized population to `target` members.
pub trait SurvivorSelector: Send + Sync {
    fn name(&self) -> &str;

    fn select_survivors(&self, population: &mut Population, target: usize, evaluator: &CostEvaluator);
}

/// Adjusts penalty coefficients from the recorded feasibility window.
pub trait PenaltyUpdater: Send + Sync {
    fn name(&self) -> &str;

    fn update(&self, state: PenaltyState) -> PenaltyState;
}

/// The operator bindings used by one solve.
#[derive(Clone)]
pub struct Operators {
    pub parent: Arc<dyn ParentSelector>,
    pub survivor: Arc<dyn SurvivorSelector>,
    pub penalty: Arc<dyn PenaltyUpdater>,
}

impl Default for Operators {
    fn default() -> Self {
        Operators {
            parent: Arc::new(BinaryTournament),
            survivor: Arc::new(BaselineSurvivors),
            penalty: Arc::new(BaselinePenalties),
        }
    }
}

impl fmt::Debug for Operators {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operators")
            .field("parent", &self.parent.name())
            .field("survivor", &self.survivor.name())
            .field("penalty", &self.penalty.name())
            .finish()
    }
}

/// Two binary tournaments on biased fitness.
#[derive(Debug, Clone, Copy, Default)]
pub struct BinaryTournament;

impl BinaryTournament {
    /// One binary tournament: two uniform draws, lower fitness wins, the
    /// first draw on ties.
    pub fn tournament(population: &Population, rng: &mut Rng) -> usize {
        let n = population.len();
        let a = rng.randint(n);
        let b = rng.randint(n);
        if population.member(b).fitness < population.member(a).fitness {
            b
        } else {
            a
        }
    }
}

/// Baseline parent selection as a free function.
pub fn select_parents_baseline(
    population: &Population,
    rng: &mut Rng,
    evaluator: &CostEvaluator,
    k: usize,
) -> Result<(usize, usize), OperatorError> {
    BinaryTournament.select(population, rng, evaluator, k)
}

impl ParentSelector for BinaryTournament {
    fn name(&self) -> &str {
        "baseline"
    }

    fn select(
        &self,
        population: &Population,
        rng: &mut Rng,
        _evaluator: &CostEvaluator,
        k: usize,
    ) -> Result<(usize, usize), OperatorError> {
        if k != 2 {
            return Err(OperatorError::UnsupportedK(k));
        }
        let n = population.len();
        if n < 2 {
            return Err(OperatorError::PopulationTooSmall(n));
        }
        let first = Self::tournament(population, rng);
        let p1 = population.solution(first);
        if population.solutions().all(|s| s == p1) {
            return Ok((first, Self::tournament(population, rng)));
        }
        loop {
            let second = Self::tournament(population, rng);
            if population.solution(second) != p1 {
                return Ok((first, second));
            }
        }
    }
}

/// Removes duplicates first, then the worst biased fitness, never touching
/// the cheapest feasible member.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineSurvivors;

pub fn select_survivors_baseline(population: &mut Population, target: usize, evaluator: &CostEvaluator) {
    BaselineSurvivors.select_survivors(population, target, evaluator)
}

impl SurvivorSelector for BaselineSurvivors {
    fn name(&self) -> &str {
        "baseline"
    }

    fn select_survivors(&self, population: &mut Population, target: usize, _evaluator: &CostEvaluator) {
        population.update_fitness();
        while population.len() > target.max(1) {
            let protected = population.best_feasible();
            let eligible = |i: usize| Some(i) != protected;
            let victim = (0..population.len())
                .filter(|&i| eligible(i) && population.has_duplicate(i))
                .max_by(|&a, &b| population.member(a).fitness.total_cmp(&population.member(b).fitness))
                .or_else(|| {
                    (0..population.len())
                        .filter(|&i| eligible(i))
                        .max_by(|&a, &b| population.member(a).fitness.total_cmp(&population.member(b).fitness))
                });
            let Some(victim) = victim else { break };
            population.remove(victim);
            population.update_fitness();
        }
    }
}

/// Penalty coefficients plus a feasibility window per coefficient.
///
/// Coefficient order is: one per load dimension, then time warp, then
/// distance (which also prices duration and prize-budget excess).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyState {
    pub load: Vec<i64>,
    pub tw: i64,
    pub dist: i64,
    pub window: usize,
    pub target: f64,
    pub max_coeff: i64,
    /// `history[c]` holds recent feasibility flags for coefficient `c`.
    pub history: Vec<VecDeque<bool>>,
}

/// Per-constraint feasibility of one offspring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityFlags {
    pub load: Vec<bool>,
    pub tw: bool,
    pub dist: bool,
}

impl FeasibilityFlags {
    pub fn of(solution: &Solution) -> Self {
        let routes = solution.routes();
        let budget_ok = solution.prize_budget().is_none_or(|b| solution.distance() <= b);
        FeasibilityFlags {
            load: vec![routes.iter().all(|r| r.stats().excess_load == 0)],
            tw: routes.iter().all(|r| r.stats().time_warp == 0),
            dist: budget_ok
                && routes
                    .iter()
                    .all(|r| r.stats().excess_distance == 0 && r.stats().excess_duration == 0),
        }
    }
}

impl PenaltyState {
    pub fn new(evaluator: &CostEvaluator, window: usize, target: f64) -> Self {
        let num = evaluator.load_penalties.len() + 2;
        PenaltyState {
            load: evaluator.load_penalties.clone(),
            tw: evaluator.tw_penalty,
            dist: evaluator.dist_penalty,
            window: window.max(1),
            target,
            max_coeff: 100_000,
            history: vec![VecDeque::new(); num],
        }
    }

    pub fn evaluator(&self) -> CostEvaluator {
        CostEvaluator::new(self.load.clone(), self.tw, self.dist)
    }

    pub fn coefficients(&self) -> Vec<i64> {
        let mut c = self.load.clone();
        c.push(self.tw);
        c.push(self.dist);
        c
    }

    fn set_coefficient(&mut self, i: usize, value: i64) {
        let nl = self.load.len();
        match i {
            _ if i < nl => self.load[i] = value,
            _ if i == nl => self.tw = value,
            _ => self.dist = value,
        }
    }

    pub fn record(&mut self, flags: &FeasibilityFlags) {
        let nl = self.load.len();
        for (c, buf) in self.history.iter_mut().enumerate() {
            let ok = if c < nl {
                flags.load.get(c).copied().unwrap_or(true)
            } else if c == nl {
                flags.tw
            } else {
                flags.dist
            };
            buf.push_back(ok);
            while buf.len() > self.window {
                buf.pop_front();
            }
        }
    }

    /// True once every buffer holds a full window.
    pub fn window_full(&self) -> bool {
        self.history.iter().all(|b| b.len() >= self.window)
    }

    pub fn feasible_fraction(&self, c: usize) -> f64 {
        let buf = &self.history[c];
        if buf.is_empty() {
            return 1.0;
        }
        buf.iter().filter(|&&b| b).count() as f64 / buf.len() as f64
    }
}

/// Multiplicative adjustment toward the target feasible fraction.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselinePenalties;

pub fn update_penalties_baseline(state: PenaltyState) -> PenaltyState {
    BaselinePenalties.update(state)
}

impl PenaltyUpdater for BaselinePenalties {
    fn name(&self) -> &str {
        "baseline"
    }

    fn update(&self, mut state: PenaltyState) -> PenaltyState {
        let coeffs = state.coefficients();
        for (c, &coeff) in coeffs.iter().enumerate() {
            let frac = state.feasible_fraction(c);
            let next = if frac > state.target + 0.05 {
                ((coeff as f64 * 0.85).round() as i64).max(1)
            } else if frac < state.target - 0.05 {
                // Always move up by at least one, or small coefficients stall.
                ((coeff as f64 * 1.2).round() as i64).max(coeff + 1).min(state.max_coeff)
            } else {
                coeff
            };
            state.set_coefficient(c, next);
        }
        for buf in &mut state.history {
            buf.clear();
        }
        state
    }
}
