use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use hgs_core::metrics::improvement;
use hgs_mep::{PromptMode, RunRecord};

fn hgsvrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgsvrp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn fixed_seed_gives_identical_summary() {
    let args = ["solve", "--variant", "vrptw", "--size", "25", "--seed", "7", "--max-iterations", "300"];
    let a = hgsvrp(&args);
    let b = hgsvrp(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    let first = |o: &Output| stdout(o).lines().next().unwrap().to_string();
    assert_eq!(first(&a), first(&b));
    assert!(first(&a).contains("cost "));
    assert!(first(&a).contains("feasible "));
    assert!(stdout(&a).lines().nth(1).unwrap().starts_with("time "));
}

#[test]
fn missing_file_names_the_path() {
    let o = hgsvrp(&["solve", "/definitely/not/here.vrp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.vrp"), "{}", stderr(&o));
}

#[test]
fn malformed_file_names_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.vrp");
    fs::write(&p, "NAME : x\nDIMENSION : 3\nNODE_COORD_SECTION\n1 0 0\n2 oops 1\n").unwrap();
    let o = hgsvrp(&["solve", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("broken.vrp") && e.contains("line"), "{e}");
}

#[test]
fn time_limit_is_respected() {
    let start = Instant::now();
    let o = hgsvrp(&["solve", "--variant", "cvrp", "--size", "200", "--max-seconds", "1"]);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(elapsed < 1.5, "took {elapsed:.2}s");
}

#[test]
fn generated_instance_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let sol = dir.path().join("s.json");
    let o = hgsvrp(&["generate", "--variant", "pcvrptw", "--size", "15", "--seed", "3", "--output", inst.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = hgsvrp(&[
        "solve",
        inst.to_str().unwrap(),
        "--max-iterations",
        "100",
        "--output",
        sol.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["variant"], "PCVRPTW");
    let dumped: serde_json::Value = serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    assert!(dumped["routes"].is_array());
    assert_eq!(dumped, summary["solution"]);
}

fn bench_csv(extra: &[&str]) -> Vec<csv::StringRecord> {
    let mut args = vec![
        "bench", "--variant", "cvrp,vrpb", "--size", "15", "--count", "2", "--seeds", "0..2", "--max-iterations", "150",
        "--format", "csv", "--jobs", "4",
    ];
    args.extend_from_slice(extra);
    let o = hgsvrp(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn baseline_against_itself_is_zero() {
    let rows = bench_csv(&["--operator", "baseline"]);
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(&r[5], "0.00");
        assert_eq!(&r[3], &r[4]);
    }
}

#[test]
fn csv_improvement_recomputes_from_printed_means() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs.csv");
    let rows = bench_csv(&["--operator", "hybrid", "--operator", "registry:hybrid-cost-heavy", "--per-instance", runs.to_str().unwrap()]);
    assert_eq!(rows.len(), 4);
    let per_run: Vec<csv::StringRecord> = csv::Reader::from_path(&runs).unwrap().records().map(|x| x.unwrap()).collect();
    // 2 variants x 2 instances x 2 seeds x 3 bindings
    assert_eq!(per_run.len(), 24);
    for r in rows {
        let base: f64 = r[3].parse().unwrap();
        let cand: f64 = r[4].parse().unwrap();
        let pct: f64 = r[5].parse().unwrap();
        let expect = (improvement(base, cand).unwrap() * 100.0).round() / 100.0;
        assert!((pct - expect).abs() < 1e-9, "{pct} vs {expect}");
        let costs: Vec<f64> = per_run
            .iter()
            .filter(|p| p[1] == r[0] && p[2] == r[1])
            .map(|p| p[4].parse().unwrap())
            .collect();
        assert_eq!(costs.len(), 4);
        let mean = costs.iter().sum::<f64>() / 4.0;
        assert!((format!("{mean:.2}").parse::<f64>().unwrap() - cand).abs() < 1e-9);
    }
}

#[test]
fn empty_instance_dir_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hgsvrp(&["bench", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no instances"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    fs::write(&p, "[bench]\nseedz = [1]\n").unwrap();
    let o = hgsvrp(&["--config", p.to_str().unwrap(), "bench"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seedz"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(hgsvrp(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(hgsvrp(&["solve"]).status.code(), Some(1));
    assert_eq!(hgsvrp(&["solve", "--variant", "cvrp", "--operator", "nope"]).status.code(), Some(1));
    assert_eq!(hgsvrp(&["evolve", "--ablation", "sideways"]).status.code(), Some(1));
    assert_eq!(hgsvrp(&["--version"]).status.code(), Some(0));
}

fn evolve(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "evolve", "--generations", "3", "--offspring", "3", "--instances", "2", "--size", "12", "--max-iterations", "60",
        "--output", dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    hgsvrp(&args)
}

#[test]
fn mock_evolution_prints_monotone_generations() {
    let dir = tempfile::tempdir().unwrap();
    let o = evolve(dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fits: Vec<f64> = stdout(&o)
        .lines()
        .filter(|l| l.starts_with("generation "))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(fits.len(), 3);
    assert!(fits.windows(2).all(|w| w[1] >= w[0]), "{fits:?}");
    let record = RunRecord::read(&dir.path().join("run-seed0.jsonl")).unwrap();
    assert_eq!(record.generations.len(), 3);
}

#[test]
fn ablation_modes_shape_logged_prompts() {
    for (mode, planning, reasoning) in [
        (PromptMode::Full, true, true),
        (PromptMode::NoInit, false, true),
        (PromptMode::Reactive, false, false),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = evolve(dir.path(), &["--ablation", &mode.to_string()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let record = RunRecord::read(&dir.path().join("run-seed0.jsonl")).unwrap();
        assert!(!record.prompts.is_empty());
        for p in &record.prompts {
            assert_eq!(p.prompt.contains("Planning Phase"), planning, "{mode}");
            assert_eq!(p.prompt.contains("Reasoning Phase"), reasoning, "{mode}");
        }
    }
}

#[test]
fn unreachable_generator_exits_three_and_keeps_partial_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[generator]\nkind = \"http\"\n[generator.http]\nendpoint = \"http://127.0.0.1:9/v1\"\n").unwrap();
    let runs = dir.path().join("runs");
    let o = hgsvrp(&[
        "--config",
        cfg.to_str().unwrap(),
        "evolve",
        "--generations",
        "2",
        "--offspring",
        "2",
        "--instances",
        "1",
        "--size",
        "8",
        "--max-iterations",
        "30",
        "--output",
        runs.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let record = RunRecord::read(&runs.join("run-seed0.jsonl")).unwrap();
    assert!(record.aborted.is_some());
    assert!(!record.candidates.is_empty());
}
