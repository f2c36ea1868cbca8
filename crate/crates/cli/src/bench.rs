//! Running operator bindings over a shared instance set.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hgs_core::instance::{generate_instance, parse_instance, GeneratorSpec, Variant};
use hgs_core::registry::operators_for;
use hgs_core::rng::derive_seed;
use hgs_core::{solve, ProblemData, SolveParams};

use crate::report::{BenchReport, Environment, RunRow};
use crate::CliError;

pub struct NamedInstance {
    pub name: String,
    pub data: ProblemData,
}

/// Every regular file in `dir`, sorted by name.
pub fn load_dir(dir: &Path) -> Result<Vec<NamedInstance>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    paths.iter().map(|p| load_file(p)).collect()
}

pub fn load_file(path: &Path) -> Result<NamedInstance, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let data = parse_instance(file, None).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let name = path
        .file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(NamedInstance { name, data })
}

/// `count` instances of each variant, seeded from `seed`.
pub fn generated(variants: &[Variant], size: usize, count: usize, seed: u64) -> Result<Vec<NamedInstance>, CliError> {
    let mut out = Vec::new();
    for &v in variants {
        for i in 0..count {
            let s = derive_seed(seed, i as u64);
            let data = generate_instance(&GeneratorSpec::new(v, size, s)).map_err(|e| CliError::Input(e.to_string()))?;
            out.push(NamedInstance {
                name: format!("{}-n{size}-{i}", v.name().to_lowercase()),
                data,
            });
        }
    }
    Ok(out)
}

pub struct BenchSpec<'a> {
    pub instances: &'a [NamedInstance],
    /// Compared bindings; `baseline` is always run as the reference.
    pub operators: Vec<String>,
    pub seeds: Vec<u64>,
    pub params: SolveParams,
    pub jobs: usize,
}

/// Runs every (instance, seed, binding) and summarises per variant.
pub fn run_bench(spec: &BenchSpec) -> Result<(BenchReport, Vec<RunRow>), CliError> {
    if spec.instances.is_empty() {
        return Err(CliError::Input("empty instance set".into()));
    }
    if spec.seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let mut bindings = vec!["baseline".to_string()];
    for op in &spec.operators {
        if !bindings.contains(op) {
            bindings.push(op.clone());
        }
    }
    let mut ops = Vec::new();
    for b in &bindings {
        ops.push(operators_for(b).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    spec.params.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut jobs = Vec::new();
    for (i, _) in spec.instances.iter().enumerate() {
        for &seed in &spec.seeds {
            for b in 0..bindings.len() {
                jobs.push((i, seed, b));
            }
        }
    }
    let results: Mutex<Vec<Option<Result<RunRow, CliError>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..spec.jobs.clamp(1, jobs.len()) {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                if j >= jobs.len() {
                    break;
                }
                let (i, seed, b) = jobs[j];
                let inst = &spec.instances[i];
                let mut params = spec.params.clone();
                params.seed = seed;
                params.record_trace = false;
                params.operators = ops[b].clone();
                let row = solve(&inst.data, &params)
                    .map(|r| RunRow {
                        instance: inst.name.clone(),
                        variant: inst.data.variant_label().to_string(),
                        operator: bindings[b].clone(),
                        seed,
                        cost: r.best_cost,
                        feasible: r.feasible,
                        seconds: r.wall_seconds,
                    })
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", inst.name)));
                results.lock().expect("results lock")[j] = Some(row);
            });
        }
    });
    let runs = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>, _>>()?;
    let environment = Environment {
        seeds: spec.seeds.clone(),
        max_iterations: spec.params.max_iterations,
        max_seconds: spec.params.max_seconds,
        instances: spec.instances.len(),
    };
    let compared: Vec<String> = if spec.operators.is_empty() {
        vec!["baseline".into()]
    } else {
        spec.operators.clone()
    };
    Ok((BenchReport::from_runs(&runs, &compared, environment), runs))
}
