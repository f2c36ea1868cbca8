//! Named parent-selection operators and their parameter schemas.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::evolved::{HybridParams, HybridSelector};
use crate::hgs::{BaselinePenalties, BaselineSurvivors, BinaryTournament, Operators, ParentSelector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("unknown operator {0:?}")]
    UnknownOperator(String),
    #[error("invalid parameters for {name}: {message}")]
    InvalidParams { name: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Baseline,
    Hybrid,
}

/// A registry entry: a base operator plus parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: String,
    pub kind: OperatorKind,
    pub description: String,
    pub params: Map<String, Value>,
}

fn entry(name: &str, kind: OperatorKind, description: &str, params: Value) -> RegistryEntry {
    RegistryEntry {
        name: name.to_string(),
        kind,
        description: description.to_string(),
        params: params.as_object().cloned().unwrap_or_default(),
    }
}

/// Every built-in variant, baseline first.
pub fn entries() -> Vec<RegistryEntry> {
    use OperatorKind::*;
    vec![
        entry("baseline", Baseline, "binary tournament on biased fitness", json!({})),
        entry("hybrid", Hybrid, "stratified diversity-pressure selector, published constants", json!({})),
        entry(
            "hybrid-cost-heavy",
            Hybrid,
            "weights shifted toward cost",
            json!({"w_struct": 0.3, "w_cost": 0.55, "w_feas": 0.15}),
        ),
        entry(
            "hybrid-struct-heavy",
            Hybrid,
            "weights shifted toward structure",
            json!({"w_struct": 0.75, "w_cost": 0.15, "w_feas": 0.1}),
        ),
        entry("hybrid-small-tournament", Hybrid, "tournament of three", json!({"t_size": 3})),
        entry(
            "hybrid-feasible-only",
            Hybrid,
            "tournament never admits infeasible members",
            json!({"allow_infeasible_prob": 0.0}),
        ),
        entry("hybrid-no-noise", Hybrid, "deterministic scoring", json!({"noise": 0.0})),
        entry(
            "hybrid-wide-sample",
            Hybrid,
            "larger candidate samples",
            json!({"sample_cap_small": 60, "sample_cap_large": 40}),
        ),
    ]
}

pub fn lookup(name: &str) -> Result<RegistryEntry, RegistryError> {
    entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| RegistryError::UnknownOperator(name.to_string()))
}

/// Merges `overrides` into the defaults for `kind` and checks ranges.
pub fn hybrid_params(name: &str, overrides: &Map<String, Value>) -> Result<HybridParams, RegistryError> {
    let mut base = serde_json::to_value(HybridParams::default()).expect("params serialize");
    let obj = base.as_object_mut().expect("params are an object");
    for (k, v) in overrides {
        obj.insert(k.clone(), v.clone());
    }
    let invalid = |message: String| RegistryError::InvalidParams {
        name: name.to_string(),
        message,
    };
    let p: HybridParams = serde_json::from_value(base).map_err(|e| invalid(e.to_string()))?;
    if p.t_size == 0 {
        return Err(invalid("t_size must be at least 1".into()));
    }
    for (field, v) in [
        ("allow_infeasible_prob", p.allow_infeasible_prob),
        ("w_struct", p.w_struct),
        ("w_cost", p.w_cost),
        ("w_feas", p.w_feas),
        ("large_w_cost", p.large_w_cost),
        ("large_w_feas", p.large_w_feas),
        ("large_w_div", p.large_w_div),
        ("diversity_bonus", p.diversity_bonus),
        ("diversity_gap", p.diversity_gap),
        ("noise", p.noise),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(format!("{field} must lie in [0, 1], got {v}")));
        }
    }
    if p.sample_cap_large == 0 || p.sample_cap_small == 0 {
        return Err(invalid("sample caps must be positive".into()));
    }
    Ok(p)
}

/// Builds a selector from a kind plus overrides.
pub fn build_selector(
    name: &str,
    kind: OperatorKind,
    overrides: &Map<String, Value>,
) -> Result<Arc<dyn ParentSelector>, RegistryError> {
    match kind {
        OperatorKind::Baseline => {
            if !overrides.is_empty() {
                return Err(RegistryError::InvalidParams {
                    name: name.to_string(),
                    message: "baseline takes no parameters".into(),
                });
            }
            Ok(Arc::new(BinaryTournament))
        }
        OperatorKind::Hybrid => Ok(Arc::new(HybridSelector::new(hybrid_params(name, overrides)?).named(name))),
    }
}

pub fn selector(name: &str) -> Result<Arc<dyn ParentSelector>, RegistryError> {
    let e = lookup(name)?;
    build_selector(&e.name, e.kind, &e.params)
}

/// Resolves a command-line operator choice: `baseline`, `hybrid`,
/// `pyvrp-plus` or `registry:<name>`.
pub fn operators_for(choice: &str) -> Result<Operators, RegistryError> {
    let parent = match choice {
        "baseline" => selector("baseline")?,
        "hybrid" | "pyvrp-plus" => selector("hybrid")?,
        other => match other.strip_prefix("registry:") {
            Some(name) => selector(name)?,
            None => return Err(RegistryError::UnknownOperator(other.to_string())),
        },
    };
    // Only the parent selector has an evolved implementation; the integrated
    // configuration therefore keeps the baseline survivor and penalty rules.
    Ok(Operators {
        parent,
        survivor: Arc::new(BaselineSurvivors),
        penalty: Arc::new(BaselinePenalties),
    })
}

fn schema() -> Value {
    let d = HybridParams::default();
    let unit = |default: f64| json!({"type": "number", "min": 0.0, "max": 1.0, "default": default});
    let count = |default: usize| json!({"type": "integer", "min": 1, "default": default});
    json!({
        "t_size": count(d.t_size),
        "allow_infeasible_prob": unit(d.allow_infeasible_prob),
        "large_threshold": {"type": "integer", "min": 0, "default": d.large_threshold},
        "sample_cap_large": count(d.sample_cap_large),
        "sample_cap_small": count(d.sample_cap_small),
        "w_struct": unit(d.w_struct),
        "w_cost": unit(d.w_cost),
        "w_feas": unit(d.w_feas),
        "large_w_cost": unit(d.large_w_cost),
        "large_w_feas": unit(d.large_w_feas),
        "large_w_div": unit(d.large_w_div),
        "diversity_bonus": unit(d.diversity_bonus),
        "diversity_gap": unit(d.diversity_gap),
        "noise": unit(d.noise),
    })
}

/// The registry as a JSON document: operators with parameter schemas.
pub fn manifest() -> Value {
    let ops: Vec<Value> = entries()
        .into_iter()
        .map(|e| {
            let schema = match e.kind {
                OperatorKind::Baseline => json!({}),
                OperatorKind::Hybrid => schema(),
            };
            json!({
                "name": e.name,
                "kind": e.kind,
                "description": e.description,
                "params": e.params,
                "schema": schema,
            })
        })
        .collect();
    json!({ "plug_point": "select_parents", "operators": ops })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_builds() {
        for e in entries() {
            let s = build_selector(&e.name, e.kind, &e.params).unwrap();
            assert_eq!(s.name(), e.name);
        }
    }

    #[test]
    fn manifest_lists_all_entries() {
        let m = manifest();
        let names: Vec<&str> = m["operators"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["name"].as_str().unwrap())
            .collect();
        assert_eq!(names.len(), entries().len());
        assert_eq!(m["operators"][1]["schema"]["t_size"]["default"], 7);
    }

    #[test]
    fn bad_overrides_are_rejected() {
        let mut o = Map::new();
        o.insert("w_cost".into(), json!(1.5));
        assert!(hybrid_params("x", &o).is_err());
        let mut o = Map::new();
        o.insert("unknown".into(), json!(1));
        assert!(hybrid_params("x", &o).is_err());
        assert!(matches!(operators_for("nope"), Err(RegistryError::UnknownOperator(_))));
        assert!(operators_for("registry:hybrid-no-noise").is_ok());
    }
}
