//! The TOML configuration file. Every table is optional; unknown keys are
//! errors.

use std::path::{Path, PathBuf};

use hgs_core::instance::Variant;
use hgs_core::SolveParams;
use hgs_mep::{EvalConfig, EvolveConfig, HttpConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub solve: SolveParams,
    pub bench: BenchConfig,
    pub evolve: EvolveConfig,
    pub eval: EvalConfig,
    pub generator: GeneratorConfig,
    pub instances: InstanceSet,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Config::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string().trim().to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Operator bindings compared against the baseline.
    pub operators: Vec<String>,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub size: usize,
    pub count: usize,
    pub instance_seed: u64,
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            operators: vec!["hybrid".into()],
            seeds: vec![0],
            variants: Variant::ALL.into_iter().filter(|v| *v != Variant::Tsp).collect(),
            size: 50,
            count: 5,
            instance_seed: 0,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    /// Registry variants picked from `variants` per request.
    Lattice,
    /// Always proposes the baseline.
    Baseline,
    /// Replies with `responses` in order.
    Scripted,
    Http,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub variants: Vec<String>,
    pub responses: Vec<String>,
    pub http: HttpConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            kind: GeneratorKind::Lattice,
            variants: Vec::new(),
            responses: Vec::new(),
            http: HttpConfig::default(),
        }
    }
}

/// Instances used for evolution: a directory of files or generated ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSet {
    pub dir: Option<PathBuf>,
    pub variant: Variant,
    pub size: usize,
    pub count: usize,
    pub seed: u64,
}

impl Default for InstanceSet {
    fn default() -> Self {
        InstanceSet {
            dir: None,
            variant: Variant::Tsp,
            size: 100,
            count: 10,
            seed: 0,
        }
    }
}
