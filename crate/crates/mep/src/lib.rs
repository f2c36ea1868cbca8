//! Evolving parent-selection operators for the HGS solver with a text
//! generator in the loop.
//!
//! A run starts from the baseline operator. Each generation renders a prompt
//! from two surviving candidates, asks the generator for a new operator,
//! evaluates it by solving a fixed instance set, and keeps the best few.

pub mod candidate;
pub mod evaluate;
pub mod evolve;
pub mod generator;
pub mod knowledge;
pub mod parse;
pub mod prompt;
pub mod record;
pub mod sandbox;

pub use candidate::{Candidate, CandidateKind, Lineage, Payload, WORST_FITNESS};
pub use evaluate::{
    default_instances, evaluate_candidate, CandidateEvaluator, EvalConfig, Evaluation, ScriptedEvaluator, SolveEvaluator,
};
pub use evolve::{evolve, evolve_run, replay, EvolveConfig, EvolveError, EvolveOutcome};
pub use generator::{Generator, GeneratorError, HttpConfig, HttpGenerator, LatticeGenerator, ScriptedGenerator};
pub use knowledge::{default_knowledge, KnowledgeBase};
pub use parse::{parse_generator_response, ParseError};
pub use prompt::{render_prompt, PromptError, PromptMode, Template};
pub use record::RunRecord;
