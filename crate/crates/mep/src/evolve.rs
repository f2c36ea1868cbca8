//! The generation loop: prompt, generate, parse, evaluate, retain.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hgs_core::metrics::improvement;
use hgs_core::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::{Candidate, Lineage};
use crate::evaluate::{CandidateEvaluator, Evaluation};
use crate::generator::{Generator, ReplayGenerator, RequestContext};
use crate::knowledge::{default_knowledge, KnowledgeBase};
use crate::parse::parse_generator_response;
use crate::prompt::{render_prompt, PromptError, PromptMode, Template};
use crate::record::{Attempt, GenerationLog, PromptLog, RecordError, RunHeader, RunRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub generations: usize,
    pub offspring_per_gen: usize,
    pub survivors: usize,
    /// One full run per seed.
    pub seeds: Vec<u64>,
    pub mode: PromptMode,
    /// Extra generator attempts after a failed call.
    pub retries: usize,
    /// Concurrent evaluations within a generation.
    pub jobs: usize,
    pub knowledge: KnowledgeBase,
    /// Where run records go, one `run-seed<N>.jsonl` per seed.
    pub record_dir: Option<PathBuf>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            generations: 10,
            offspring_per_gen: 10,
            survivors: 5,
            seeds: vec![0],
            mode: PromptMode::Full,
            retries: 2,
            jobs: 1,
            knowledge: default_knowledge(),
            record_dir: None,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.generations == 0 || self.offspring_per_gen == 0 || self.survivors == 0 {
            return Err("generations, offspring_per_gen and survivors must be positive".into());
        }
        if self.seeds.is_empty() {
            return Err("at least one seed is required".into());
        }
        if self.jobs == 0 {
            return Err("jobs must be positive".into());
        }
        if self.mode == PromptMode::Full && !self.knowledge.is_complete() {
            return Err("full mode needs non-empty pitfalls, strategies and traps".into());
        }
        Ok(())
    }

    pub fn record_path(&self, seed: u64) -> Option<PathBuf> {
        self.record_dir.as_ref().map(|d| d.join(format!("run-seed{seed}.jsonl")))
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{message}")]
    GeneratorUnavailable { message: String, record: Box<RunRecord> },
    #[error("baseline evaluation failed: {0}")]
    BaselineFailed(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Record(#[from] RecordError),
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: Candidate,
    /// Index into `records` of the run that found `best`.
    pub best_run: usize,
    pub records: Vec<RunRecord>,
}

/// Evaluations keyed by payload, shared across runs.
pub type EvalCache = HashMap<String, Evaluation>;

fn evaluate_all(
    candidates: &[Candidate],
    evaluator: &dyn CandidateEvaluator,
    cache: &mut EvalCache,
    jobs: usize,
) -> Vec<Evaluation> {
    let mut todo: Vec<(String, &Candidate)> = Vec::new();
    for c in candidates {
        if let Some(p) = &c.payload {
            let key = p.key();
            if !cache.contains_key(&key) && !todo.iter().any(|(k, _)| *k == key) {
                todo.push((key, c));
            }
        }
    }
    let results: Mutex<Vec<Option<Evaluation>>> = Mutex::new(vec![None; todo.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(todo.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= todo.len() {
                    break;
                }
                let e = evaluator.evaluate(todo[i].1);
                results.lock().expect("results lock")[i] = Some(e);
            });
        }
    });
    for ((key, _), e) in todo.into_iter().zip(results.into_inner().expect("results lock")) {
        cache.insert(key, e.expect("every job ran"));
    }
    candidates
        .iter()
        .map(|c| match &c.payload {
            Some(p) => cache[&p.key()].clone(),
            None => evaluator.evaluate(c),
        })
        .collect()
}

fn apply(candidate: &mut Candidate, e: Evaluation, baseline_cost: Option<f64>) {
    let failed = e.failed();
    let mut feedback = e.feedback;
    if let (false, Some(base)) = (failed, baseline_cost) {
        if let Ok(pct) = improvement(base, -e.fitness) {
            feedback.push_str(&format!("; {pct:+.2}% vs baseline"));
        }
    }
    candidate.fitness = Some(e.fitness);
    candidate.feedback = Some(feedback);
}

/// Two distinct survivors, uniformly; the same one twice if only one exists.
fn pick_parents(n: usize, rng: &mut Rng) -> (usize, usize) {
    if n < 2 {
        return (0, 0);
    }
    let a = rng.randint(n);
    let mut b = rng.randint(n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// Keeps the best `keep` by fitness; earlier entries win ties.
fn retain(mut pool: Vec<Candidate>, keep: usize) -> Vec<Candidate> {
    pool.sort_by(|a, b| {
        let (fa, fb) = (a.fitness.unwrap_or(f64::NEG_INFINITY), b.fitness.unwrap_or(f64::NEG_INFINITY));
        fb.total_cmp(&fa)
    });
    pool.truncate(keep);
    pool
}

/// One full run from the default operator.
pub fn evolve_run(
    config: &EvolveConfig,
    run_seed: u64,
    generator: &mut dyn Generator,
    evaluator: &dyn CandidateEvaluator,
    cache: &mut EvalCache,
) -> Result<(Candidate, RunRecord), EvolveError> {
    config.validate().map_err(EvolveError::InvalidConfig)?;
    let template = Template::select_parents();
    let mut rng = Rng::new(run_seed);
    let mut record = RunRecord {
        header: Some(RunHeader {
            config: serde_json::to_value(config).expect("config serializes"),
            run_seed,
            generator: generator.describe(),
            evaluator: evaluator.describe(),
        }),
        ..RunRecord::default()
    };

    let mut base = Candidate::baseline();
    let e = evaluate_all(std::slice::from_ref(&base), evaluator, cache, 1).remove(0);
    if e.failed() {
        return Err(EvolveError::BaselineFailed(e.feedback));
    }
    let baseline_cost = -e.fitness;
    apply(&mut base, e, None);
    record.candidates.push(base.clone());
    let mut population = vec![base];

    for generation in 1..=config.generations {
        let mut offspring = Vec::with_capacity(config.offspring_per_gen);
        for o in 0..config.offspring_per_gen {
            let (i, j) = pick_parents(population.len(), &mut rng);
            let (p1, p2) = (&population[i], &population[j]);
            let target = population[0].mean_cost().unwrap_or(baseline_cost);
            let prompt = render_prompt(&template, config.mode, (p1, p2), target, &config.knowledge)?;
            let id = format!("g{generation}-o{o}");
            let mut log = PromptLog {
                generation,
                offspring: o,
                candidate_id: None,
                parents: vec![p1.id.clone(), p2.id.clone()],
                prompt,
                attempts: Vec::new(),
            };
            let mut response = None;
            for attempt in 0..=config.retries {
                let ctx = RequestContext {
                    run_seed,
                    generation,
                    offspring: o,
                    attempt,
                };
                match generator.generate(&log.prompt, ctx) {
                    Ok(text) => {
                        log.attempts.push(Attempt {
                            response: Some(text.clone()),
                            error: None,
                        });
                        response = Some(text);
                        break;
                    }
                    Err(e) => log.attempts.push(Attempt {
                        response: None,
                        error: Some(e.to_string()),
                    }),
                }
            }
            let Some(text) = response else {
                let message = log
                    .attempts
                    .last()
                    .and_then(|a| a.error.clone())
                    .unwrap_or_default();
                record.prompts.push(log);
                record.candidates.extend(offspring);
                let message = format!("generation {generation}, offspring {o}: {message}");
                record.aborted = Some(message.clone());
                return Err(EvolveError::GeneratorUnavailable {
                    message,
                    record: Box::new(record),
                });
            };
            let parents = vec![p1.id.clone(), p2.id.clone()];
            let candidate = match parse_generator_response(&text) {
                Ok(parsed) => Candidate::new(
                    id.clone(),
                    generation,
                    Some(parsed.payload),
                    Lineage {
                        parents,
                        hypothesis: parsed.hypothesis,
                        reflection: parsed.reflection,
                    },
                ),
                Err(e) => {
                    let mut c = Candidate::new(id.clone(), generation, None, Lineage {
                        parents,
                        ..Lineage::default()
                    });
                    c.feedback = Some(format!("response rejected: {e}"));
                    c
                }
            };
            log.candidate_id = Some(id);
            record.prompts.push(log);
            offspring.push(candidate);
        }

        let evaluations = evaluate_all(&offspring, evaluator, cache, config.jobs);
        for (c, e) in offspring.iter_mut().zip(evaluations) {
            apply(c, e, Some(baseline_cost));
        }
        record.candidates.extend(offspring.iter().cloned());

        let mut pool = population;
        pool.extend(offspring);
        population = retain(pool, config.survivors);
        let best = &population[0];
        record.generations.push(GenerationLog {
            generation,
            survivors: population.iter().map(|c| c.id.clone()).collect(),
            best_id: best.id.clone(),
            best_fitness: best.fitness.expect("evaluated"),
        });
    }
    Ok((population.swap_remove(0), record))
}

/// Runs once per configured seed and reports the overall best. Records are
/// written to `record_dir` when set, including a partial record on abort.
pub fn evolve(
    config: &EvolveConfig,
    generator: &mut dyn Generator,
    evaluator: &dyn CandidateEvaluator,
) -> Result<EvolveOutcome, EvolveError> {
    config.validate().map_err(EvolveError::InvalidConfig)?;
    let mut cache = EvalCache::new();
    let mut records = Vec::new();
    let mut best: Option<(Candidate, usize)> = None;
    for (run, &seed) in config.seeds.iter().enumerate() {
        match evolve_run(config, seed, generator, evaluator, &mut cache) {
            Ok((candidate, record)) => {
                if let Some(path) = config.record_path(seed) {
                    record.write(&path)?;
                }
                let better = best
                    .as_ref()
                    .is_none_or(|(b, _)| candidate.fitness.unwrap_or(f64::MIN) > b.fitness.unwrap_or(f64::MIN));
                if better {
                    best = Some((candidate, run));
                }
                records.push(record);
            }
            Err(EvolveError::GeneratorUnavailable { message, record }) => {
                if let Some(path) = config.record_path(seed) {
                    record.write(&path)?;
                }
                return Err(EvolveError::GeneratorUnavailable { message, record });
            }
            Err(e) => return Err(e),
        }
    }
    let (best, best_run) = best.expect("at least one seed");
    Ok(EvolveOutcome { best, best_run, records })
}

/// Re-runs a recorded run, feeding back the recorded generator responses.
pub fn replay(record: &RunRecord, evaluator: &dyn CandidateEvaluator) -> Result<RunRecord, EvolveError> {
    let header = record
        .header
        .as_ref()
        .ok_or_else(|| EvolveError::InvalidConfig("record has no header".into()))?;
    let config: EvolveConfig =
        serde_json::from_value(header.config.clone()).map_err(|e| EvolveError::InvalidConfig(e.to_string()))?;
    let mut generator = ReplayGenerator::new(record.responses()).named(&header.generator);
    let mut cache = EvalCache::new();
    match evolve_run(&config, header.run_seed, &mut generator, evaluator, &mut cache) {
        Ok((_, r)) => Ok(r),
        Err(EvolveError::GeneratorUnavailable { record, .. }) => Ok(*record),
        Err(e) => Err(e),
    }
}
