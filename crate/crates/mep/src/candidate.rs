//! Evolvable operator candidates.

use std::sync::Arc;

use hgs_core::hgs::ParentSelector;
use hgs_core::registry::{self, RegistryError};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Fitness given to anything that failed to parse, crashed or timed out.
pub const WORST_FITNESS: f64 = f64::MIN;

const BASELINE_SOURCE: &str = include_str!("../assets/baseline_select_parents.py");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateKind {
    RegistryParams,
    ExternalSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    /// A registry operator plus overrides layered on its own parameters.
    RegistryParams {
        base: String,
        #[serde(default)]
        params: Map<String, Value>,
    },
    /// Python source defining `select_parents`, run in the sandbox.
    ExternalSource { source: String },
}

impl Payload {
    pub fn registry(base: &str) -> Self {
        Payload::RegistryParams {
            base: base.to_string(),
            params: Map::new(),
        }
    }

    pub fn kind(&self) -> CandidateKind {
        match self {
            Payload::RegistryParams { .. } => CandidateKind::RegistryParams,
            Payload::ExternalSource { .. } => CandidateKind::ExternalSource,
        }
    }

    /// Canonical text, used to spot behaviourally identical candidates.
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("payload serializes")
    }

    /// Builds the in-process selector for a registry payload.
    pub fn selector(&self) -> Option<Result<Arc<dyn ParentSelector>, RegistryError>> {
        let Payload::RegistryParams { base, params } = self else {
            return None;
        };
        Some(registry::lookup(base).and_then(|entry| {
            let mut merged = entry.params.clone();
            merged.extend(params.iter().map(|(k, v)| (k.clone(), v.clone())));
            let name = if params.is_empty() { base.clone() } else { format!("{base}*") };
            registry::build_selector(&name, entry.kind, &merged)
        }))
    }

    /// What the prompt shows as this candidate's code.
    pub fn code_text(&self) -> String {
        match self {
            Payload::ExternalSource { source } => source.trim_end().to_string(),
            Payload::RegistryParams { base, params } if base == "baseline" && params.is_empty() => {
                BASELINE_SOURCE.trim_end().to_string()
            }
            Payload::RegistryParams { base, params } => {
                let description = registry::lookup(base).map(|e| e.description).unwrap_or_default();
                let params = serde_json::to_string(params).expect("params serialize");
                format!("# registry operator {base}: {description}\n# parameter overrides: {params}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Lineage {
    pub parents: Vec<String>,
    pub hypothesis: Option<String>,
    pub reflection: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub generation: usize,
    /// `None` when the generator response could not be parsed.
    pub payload: Option<Payload>,
    pub fitness: Option<f64>,
    pub feedback: Option<String>,
    pub lineage: Lineage,
}

impl Candidate {
    pub fn new(id: impl Into<String>, generation: usize, payload: Option<Payload>, lineage: Lineage) -> Self {
        Candidate {
            id: id.into(),
            generation,
            payload,
            fitness: None,
            feedback: None,
            lineage,
        }
    }

    /// The default operator every run starts from.
    pub fn baseline() -> Self {
        Candidate::new("base", 0, Some(Payload::registry("baseline")), Lineage::default())
    }

    pub fn kind(&self) -> Option<CandidateKind> {
        self.payload.as_ref().map(Payload::kind)
    }

    pub fn is_evaluated(&self) -> bool {
        self.fitness.is_some()
    }

    pub fn failed(&self) -> bool {
        self.fitness == Some(WORST_FITNESS)
    }

    /// Mean cost, for evaluated candidates that did not fail.
    pub fn mean_cost(&self) -> Option<f64> {
        self.fitness.filter(|&f| f != WORST_FITNESS).map(|f| -f)
    }

    pub fn code_text(&self) -> String {
        self.payload
            .as_ref()
            .map_or_else(|| "# (no code: response could not be parsed)".to_string(), Payload::code_text)
    }
}
