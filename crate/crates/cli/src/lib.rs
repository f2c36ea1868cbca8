//! The `hgsvrp` command line: solving, benchmarking and operator evolution.

pub mod bench;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hgs_core::instance::{generate_instance, GeneratorSpec, Variant};
use hgs_core::registry::{manifest, operators_for};
use hgs_core::rng::derive_seed;
use hgs_core::{solve, CostEvaluator, HgsError, SolveParams};
use hgs_mep::{
    evolve, EvolveError, Generator, HttpGenerator, LatticeGenerator, PromptMode, ScriptedGenerator, SolveEvaluator,
};
use thiserror::Error;

use crate::bench::{BenchSpec, NamedInstance};
use crate::config::{Config, GeneratorKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hgsvrp", version, about = "Hybrid genetic search for vehicle routing problems")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Compare operator bindings against the baseline.
    Bench(BenchArgs),
    /// Evolve parent selection operators.
    Evolve(EvolveArgs),
    /// Write a generated instance as JSON.
    Generate(GenerateArgs),
    /// List the registered operator variants.
    Manifest,
}

#[derive(Args, Debug, Default)]
struct Budget {
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long)]
    max_seconds: Option<f64>,
    #[arg(long)]
    population_min: Option<usize>,
    #[arg(long)]
    population_max: Option<usize>,
}

impl Budget {
    fn apply(&self, p: &mut SolveParams) {
        if let Some(s) = self.max_seconds {
            p.max_seconds = Some(s);
            // a time limit on its own replaces the default iteration cap
            if self.max_iterations.is_none() {
                p.max_iterations = None;
            }
        }
        if let Some(i) = self.max_iterations {
            p.max_iterations = Some(i);
        }
        if let Some(m) = self.population_min {
            p.population_min = m;
        }
        if let Some(m) = self.population_max {
            p.population_max = m;
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance file (VRPLIB or JSON). Generated from --variant when absent.
    path: Option<PathBuf>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Clients in a generated instance.
    #[arg(long, default_value_t = 50)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "baseline")]
    operator: String,
    #[command(flatten)]
    budget: Budget,
    /// Write the best solution as JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the search trace as NDJSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Directory of instance files. Generated instances otherwise.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Binding to compare against the baseline; repeatable.
    #[arg(long)]
    operator: Vec<String>,
    /// Comma-separated seeds or a range such as 0..5.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long, value_parser = parse_variant, value_delimiter = ',')]
    variant: Vec<Variant>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    budget: Budget,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Also write one CSV row per solve.
    #[arg(long)]
    per_instance: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long, value_parser = parse_mode)]
    ablation: Option<PromptMode>,
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    offspring: Option<usize>,
    #[arg(long)]
    survivors: Option<usize>,
    /// Iteration budget of each evaluation solve.
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Number and size of generated evaluation instances.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, value_parser = parse_generator)]
    generator: Option<GeneratorKind>,
    /// Directory for run records.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    #[arg(long, default_value_t = 50)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse::<Variant>().map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<PromptMode, String> {
    s.parse::<PromptMode>().map_err(|e| e.to_string())
}

fn parse_generator(s: &str) -> Result<GeneratorKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| format!("unknown generator {s:?}; expected lattice, baseline, scripted or http"))
}

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad range start in {s:?}"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad range end in {s:?}"))?;
        if a >= b {
            return Err(format!("empty seed range {s:?}"));
        }
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| format!("bad seed {t:?}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Seeds)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            return match e.kind() {
                DisplayHelp | DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Solve(a) => cmd_solve(a, config, out, err),
        Command::Bench(a) => cmd_bench(a, config, out),
        Command::Evolve(a) => cmd_evolve(a, config, out, err),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Manifest => {
            let text = serde_json::to_string_pretty(&manifest()).expect("manifest serializes");
            emit(out, &text)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    writeln!(out, "{}", text.trim_end()).map_err(|e| CliError::Runtime(format!("stdout: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn solve_error(e: HgsError) -> CliError {
    match e {
        HgsError::InvalidInstance(_) | HgsError::NoVehicle => CliError::Input(e.to_string()),
        HgsError::InvalidParams(_) => CliError::Usage(e.to_string()),
        HgsError::Operator(_) => CliError::Runtime(e.to_string()),
    }
}

fn cmd_solve(a: SolveArgs, config: Config, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let inst = match (&a.path, a.variant) {
        (Some(p), hint) => {
            let inst = bench::load_file(p)?;
            if let Some(v) = hint {
                if inst.data.variant_label() != v.name() {
                    let _ = writeln!(
                        err,
                        "warning: {} reads as {}, not {}",
                        p.display(),
                        inst.data.variant_label(),
                        v.name()
                    );
                }
            }
            inst
        }
        (None, Some(v)) => {
            let data = generate_instance(&GeneratorSpec::new(v, a.size, a.instance_seed))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            NamedInstance {
                name: format!("{}-n{}-{}", v.name().to_lowercase(), a.size, a.instance_seed),
                data,
            }
        }
        (None, None) => return Err(CliError::Usage("give an instance path or --variant".into())),
    };
    let mut params = config.solve;
    a.budget.apply(&mut params);
    if let Some(s) = a.seed {
        params.seed = s;
    }
    params.record_trace = a.trace.is_some();
    params.operators = operators_for(&a.operator).map_err(|e| CliError::Usage(e.to_string()))?;
    let result = solve(&inst.data, &params).map_err(solve_error)?;
    let dump = result.best.dump(&CostEvaluator::initial_for(&inst.data));
    if let Some(p) = &a.output {
        write_file(p, &serde_json::to_string_pretty(&dump).expect("solution serializes"))?;
    }
    if let Some(p) = &a.trace {
        write_file(p, &result.trace_ndjson())?;
    }
    match a.format {
        Format::Json => {
            let v = serde_json::json!({
                "instance": inst.name,
                "variant": inst.data.variant_label(),
                "operator": a.operator,
                "seed": params.seed,
                "cost": result.best_cost,
                "feasible": result.feasible,
                "iterations": result.iterations,
                "seconds": result.wall_seconds,
                "solution": dump,
            });
            emit(out, &serde_json::to_string_pretty(&v).expect("summary serializes"))
        }
        Format::Table | Format::Csv => {
            emit(
                out,
                &format!(
                    "{} {} cost {} feasible {} routes {} iterations {}",
                    inst.name,
                    inst.data.variant_label(),
                    result.best_cost,
                    result.feasible,
                    result.best.num_routes(),
                    result.iterations
                ),
            )?;
            emit(out, &format!("time {:.3}s", result.wall_seconds))
        }
    }
}

fn cmd_bench(a: BenchArgs, config: Config, out: &mut dyn Write) -> Result<(), CliError> {
    let bc = config.bench;
    let instances = match &a.dir {
        Some(d) => bench::load_dir(d)?,
        None => {
            let variants = if a.variant.is_empty() { bc.variants.clone() } else { a.variant.clone() };
            bench::generated(
                &variants,
                a.size.unwrap_or(bc.size),
                a.count.unwrap_or(bc.count),
                bc.instance_seed,
            )?
        }
    };
    if instances.is_empty() {
        return Err(CliError::Input(match &a.dir {
            Some(d) => format!("{}: no instances found", d.display()),
            None => "empty instance set".into(),
        }));
    }
    let mut params = config.solve;
    a.budget.apply(&mut params);
    let spec = BenchSpec {
        instances: &instances,
        operators: if a.operator.is_empty() { bc.operators } else { a.operator },
        seeds: a.seeds.map_or(bc.seeds, |s| s.0),
        params,
        jobs: a.jobs.unwrap_or(bc.jobs),
    };
    let (report, runs) = bench::run_bench(&spec)?;
    if let Some(p) = &a.per_instance {
        write_file(p, &report::runs_csv(&runs))?;
    }
    let text = match a.format {
        Format::Table => report.to_table(),
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    emit(out, &text)
}

fn evaluation_instances(config: &Config) -> Result<Vec<hgs_core::ProblemData>, CliError> {
    let set = &config.instances;
    match &set.dir {
        Some(d) => Ok(bench::load_dir(d)?.into_iter().map(|i| i.data).collect()),
        None => (0..set.count)
            .map(|i| {
                generate_instance(&GeneratorSpec::new(set.variant, set.size, derive_seed(set.seed, i as u64)))
                    .map_err(|e| CliError::Input(e.to_string()))
            })
            .collect(),
    }
}

fn make_generator(config: &Config) -> Result<Box<dyn Generator>, CliError> {
    let g = &config.generator;
    Ok(match g.kind {
        GeneratorKind::Lattice if g.variants.is_empty() => Box::new(LatticeGenerator::registry()),
        GeneratorKind::Lattice => Box::new(LatticeGenerator::new(g.variants.clone())),
        GeneratorKind::Baseline => {
            Box::new(ScriptedGenerator::repeating("```json\n{\"registry\": \"baseline\"}\n```"))
        }
        GeneratorKind::Scripted if g.responses.is_empty() => {
            return Err(CliError::Usage("scripted generator needs [generator] responses".into()))
        }
        GeneratorKind::Scripted => Box::new(ScriptedGenerator::new(g.responses.clone())),
        GeneratorKind::Http => Box::new(HttpGenerator::new(g.http.clone())),
    })
}

fn cmd_evolve(a: EvolveArgs, mut config: Config, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let ev = &mut config.evolve;
    if let Some(m) = a.ablation {
        ev.mode = m;
    }
    if let Some(s) = a.seeds {
        ev.seeds = s.0;
    }
    if let Some(j) = a.jobs {
        ev.jobs = j;
    }
    if let Some(g) = a.generations {
        ev.generations = g;
    }
    if let Some(o) = a.offspring {
        ev.offspring_per_gen = o;
    }
    if let Some(s) = a.survivors {
        ev.survivors = s;
    }
    if let Some(o) = a.output {
        ev.record_dir = Some(o);
    }
    if ev.record_dir.is_none() {
        ev.record_dir = Some(PathBuf::from("mep-runs"));
    }
    if let Some(i) = a.max_iterations {
        config.eval.solve.max_iterations = Some(i);
    }
    if let Some(n) = a.instances {
        config.instances.count = n;
    }
    if let Some(n) = a.size {
        config.instances.size = n;
    }
    if let Some(k) = a.generator {
        config.generator.kind = k;
    }
    config.evolve.validate().map_err(CliError::Usage)?;
    let dir = config.evolve.record_dir.clone().expect("set above");
    fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;

    let instances = evaluation_instances(&config)?;
    let evaluator =
        SolveEvaluator::new(instances, config.eval.clone()).map_err(|e| CliError::Input(e.to_string()))?;
    let mut generator = make_generator(&config)?;
    let outcome = match evolve(&config.evolve, generator.as_mut(), &evaluator) {
        Ok(o) => o,
        Err(e @ EvolveError::GeneratorUnavailable { .. }) => {
            let _ = writeln!(err, "partial run record kept in {}", dir.display());
            return Err(CliError::Runtime(e.to_string()));
        }
        Err(e @ (EvolveError::InvalidConfig(_) | EvolveError::Prompt(_))) => return Err(CliError::Usage(e.to_string())),
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };
    for (record, seed) in outcome.records.iter().zip(&config.evolve.seeds) {
        emit(out, &format!("run seed {seed}"))?;
        for g in &record.generations {
            emit(
                out,
                &format!("generation {} best_fitness {:.2} best {}", g.generation, g.best_fitness, g.best_id),
            )?;
        }
        if let Some(p) = config.evolve.record_path(*seed) {
            emit(out, &format!("record {}", p.display()))?;
        }
    }
    let best = &outcome.best;
    emit(
        out,
        &format!(
            "best {} fitness {:.2} run seed {}",
            best.id,
            best.fitness.unwrap_or(f64::MIN),
            config.evolve.seeds[outcome.best_run]
        ),
    )?;
    if let Some(p) = &best.payload {
        emit(out, &serde_json::to_string(p).expect("payload serializes"))?;
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let data =
        generate_instance(&GeneratorSpec::new(a.variant, a.size, a.seed)).map_err(|e| CliError::Usage(e.to_string()))?;
    let text = data.to_json();
    match &a.output {
        Some(p) => write_file(p, &text),
        None => emit(out, &text),
    }
}
