//! Scoring candidates by solving a fixed instance set.

use std::sync::Arc;
use std::time::{Duration, Instant};

use hgs_core::hgs::ParentSelector;
use hgs_core::instance::{generate_instance, validate, GeneratorSpec, Variant};
use hgs_core::rng::derive_seed;
use hgs_core::{solve, ProblemData, SolveParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::{Candidate, Payload, WORST_FITNESS};
use crate::sandbox::{SandboxConfig, SandboxSelector};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Solver settings; `seed` is replaced per instance.
    pub solve: SolveParams,
    /// Wall-clock limit for one candidate over the whole instance set.
    pub timeout_seconds: f64,
    pub seed: u64,
    pub sandbox: SandboxConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            solve: SolveParams {
                record_trace: false,
                ..SolveParams::default()
            },
            timeout_seconds: 600.0,
            seed: 0,
            sandbox: SandboxConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub feedback: String,
    /// Best cost per instance; empty on failure.
    pub costs: Vec<i64>,
}

impl Evaluation {
    pub fn failure(feedback: impl Into<String>) -> Self {
        Evaluation {
            fitness: WORST_FITNESS,
            feedback: feedback.into(),
            costs: Vec::new(),
        }
    }

    pub fn failed(&self) -> bool {
        self.fitness == WORST_FITNESS
    }
}

/// Anything that can turn a candidate into a fitness.
pub trait CandidateEvaluator: Send + Sync {
    fn describe(&self) -> String;

    fn evaluate(&self, candidate: &Candidate) -> Evaluation;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalSetupError {
    #[error("instance set is empty")]
    NoInstances,
    #[error("instance {index} is invalid: {message}")]
    InvalidInstance { index: usize, message: String },
}

/// Generated TSP instances used when no set is given.
pub fn default_instances(count: usize, n: usize, seed: u64) -> Vec<ProblemData> {
    (0..count)
        .map(|i| {
            generate_instance(&GeneratorSpec::new(Variant::Tsp, n, derive_seed(seed, i as u64)))
                .expect("generated TSP instances are valid")
        })
        .collect()
}

/// Solves every instance with the candidate bound as parent selector.
pub struct SolveEvaluator {
    instances: Vec<ProblemData>,
    config: EvalConfig,
}

impl SolveEvaluator {
    pub fn new(instances: Vec<ProblemData>, config: EvalConfig) -> Result<Self, EvalSetupError> {
        if instances.is_empty() {
            return Err(EvalSetupError::NoInstances);
        }
        for (index, data) in instances.iter().enumerate() {
            let issues = validate(data);
            if !issues.is_empty() {
                return Err(EvalSetupError::InvalidInstance {
                    index,
                    message: issues.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
                });
            }
        }
        config
            .solve
            .validate()
            .map_err(|e| EvalSetupError::InvalidInstance {
                index: 0,
                message: e.to_string(),
            })?;
        Ok(SolveEvaluator { instances, config })
    }

    pub fn instances(&self) -> &[ProblemData] {
        &self.instances
    }

    pub fn config(&self) -> &EvalConfig {
        &self.config
    }
}

impl CandidateEvaluator for SolveEvaluator {
    fn describe(&self) -> String {
        format!(
            "solve[{} instances, seed {}, max_iterations {:?}, max_seconds {:?}]",
            self.instances.len(),
            self.config.seed,
            self.config.solve.max_iterations,
            self.config.solve.max_seconds
        )
    }

    fn evaluate(&self, candidate: &Candidate) -> Evaluation {
        evaluate_candidate(candidate, &self.instances, &self.config)
    }
}

/// Fitness is minus the mean best cost; any failure gives the worst fitness
/// and a message saying what went wrong.
pub fn evaluate_candidate(candidate: &Candidate, instances: &[ProblemData], config: &EvalConfig) -> Evaluation {
    let start = Instant::now();
    let timeout = Duration::from_secs_f64(config.timeout_seconds.max(0.0));
    let Some(payload) = &candidate.payload else {
        return Evaluation::failure(
            candidate
                .feedback
                .clone()
                .unwrap_or_else(|| "no code to evaluate".to_string()),
        );
    };
    if instances.is_empty() {
        return Evaluation::failure("instance set is empty");
    }

    let selector: Arc<dyn ParentSelector> = match payload {
        Payload::RegistryParams { .. } => match payload.selector().expect("registry payload") {
            Ok(s) => s,
            Err(e) => return Evaluation::failure(format!("invalid candidate: {e}")),
        },
        Payload::ExternalSource { source } => {
            match SandboxSelector::start(&config.sandbox, source, Some(start + timeout)) {
                Ok(s) => Arc::new(s),
                Err(e) => return Evaluation::failure(e.to_string()),
            }
        }
    };

    let mut costs = Vec::with_capacity(instances.len());
    let mut feasible = 0;
    for (i, data) in instances.iter().enumerate() {
        let mut params = config.solve.clone();
        params.seed = derive_seed(config.seed, i as u64);
        params.operators.parent = Arc::clone(&selector);
        match solve(data, &params) {
            Ok(r) => {
                costs.push(r.best_cost);
                feasible += r.feasible as usize;
            }
            Err(e) => return Evaluation::failure(format!("instance {i}: {e}")),
        }
        if start.elapsed() > timeout {
            return Evaluation::failure(format!(
                "timeout: exceeded {:.1}s after {} of {} instances",
                timeout.as_secs_f64(),
                i + 1,
                instances.len()
            ));
        }
    }
    let mean = costs.iter().map(|&c| c as f64).sum::<f64>() / costs.len() as f64;
    Evaluation {
        fitness: -mean,
        feedback: format!(
            "mean cost {mean:.2} over {} instances ({feasible} feasible)",
            costs.len()
        ),
        costs,
    }
}

type CostFn = dyn Fn(&Candidate) -> Result<f64, String> + Send + Sync;

/// Maps candidates to a mean cost with a caller-supplied function, so loop
/// behaviour can be tested without solving anything.
pub struct ScriptedEvaluator {
    cost: Box<CostFn>,
}

impl ScriptedEvaluator {
    pub fn new(cost: impl Fn(&Candidate) -> Result<f64, String> + Send + Sync + 'static) -> Self {
        ScriptedEvaluator { cost: Box::new(cost) }
    }
}

impl CandidateEvaluator for ScriptedEvaluator {
    fn describe(&self) -> String {
        "scripted".into()
    }

    fn evaluate(&self, candidate: &Candidate) -> Evaluation {
        if candidate.payload.is_none() {
            return Evaluation::failure(candidate.feedback.clone().unwrap_or_default());
        }
        match (self.cost)(candidate) {
            Ok(mean) => Evaluation {
                fitness: -mean,
                feedback: format!("mean cost {mean:.2}"),
                costs: Vec::new(),
            },
            Err(e) => Evaluation::failure(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setup_rejects_empty_and_invalid_sets() {
        assert!(matches!(
            SolveEvaluator::new(vec![], EvalConfig::default()),
            Err(EvalSetupError::NoInstances)
        ));
        let mut bad = default_instances(1, 5, 0).remove(0);
        bad.clients[1].tw_early = bad.clients[1].tw_late + 5;
        assert!(matches!(
            SolveEvaluator::new(vec![bad], EvalConfig::default()),
            Err(EvalSetupError::InvalidInstance { index: 0, .. })
        ));
    }

    #[test]
    fn unknown_registry_name_fails_softly() {
        let mut c = Candidate::baseline();
        c.payload = Some(Payload::registry("no-such-operator"));
        let e = evaluate_candidate(&c, &default_instances(1, 5, 0), &EvalConfig::default());
        assert!(e.failed());
        assert!(e.feedback.contains("no-such-operator"), "{}", e.feedback);
    }
}
