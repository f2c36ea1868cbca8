//! Benchmark tables. Every printed number is rounded to two decimals before
//! anything is derived from it, so the CSV reproduces the table exactly.

use hgs_core::metrics::improvement;
use serde::{Deserialize, Serialize};

/// One solve in a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance: String,
    pub variant: String,
    pub operator: String,
    pub seed: u64,
    pub cost: i64,
    pub feasible: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub variant: String,
    pub operator: String,
    pub runs: usize,
    pub baseline_cost: f64,
    pub candidate_cost: f64,
    pub improvement_pct: f64,
    pub baseline_seconds: f64,
    pub candidate_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seeds: Vec<u64>,
    pub max_iterations: Option<u64>,
    pub max_seconds: Option<f64>,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
    pub environment: Environment,
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Improvement between two already rounded means, itself rounded.
pub fn row_improvement(baseline_cost: f64, candidate_cost: f64) -> f64 {
    improvement(baseline_cost, candidate_cost).map_or(f64::NAN, round2)
}

impl BenchReport {
    /// Builds one row per (variant, operator) from individual runs.
    /// `operators` lists the compared bindings; runs of `baseline` are the
    /// reference for every row.
    pub fn from_runs(runs: &[RunRow], operators: &[String], environment: Environment) -> Self {
        let mut variants: Vec<&str> = Vec::new();
        for r in runs {
            if !variants.contains(&r.variant.as_str()) {
                variants.push(&r.variant);
            }
        }
        let mut rows = Vec::new();
        for v in variants {
            let of = |op: &str| -> Vec<&RunRow> { runs.iter().filter(|r| r.variant == v && r.operator == op).collect() };
            let base_cost = round2(mean(of("baseline").into_iter().map(|r| r.cost as f64)));
            let base_secs = round2(mean(of("baseline").into_iter().map(|r| r.seconds)));
            for op in operators {
                let cost = round2(mean(of(op).into_iter().map(|r| r.cost as f64)));
                rows.push(ReportRow {
                    variant: v.to_string(),
                    operator: op.clone(),
                    runs: of(op).len(),
                    baseline_cost: base_cost,
                    candidate_cost: cost,
                    improvement_pct: row_improvement(base_cost, cost),
                    baseline_seconds: base_secs,
                    candidate_seconds: round2(mean(of(op).into_iter().map(|r| r.seconds))),
                });
            }
        }
        BenchReport { rows, environment }
    }

    pub fn to_table(&self) -> String {
        let header = [
            "Variant",
            "Operator",
            "Runs",
            "Baseline Cost",
            "Candidate Cost",
            "Improvement (%)",
            "Baseline Time (s)",
            "Candidate Time (s)",
        ];
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.variant.clone(),
                    r.operator.clone(),
                    r.runs.to_string(),
                    format!("{:.2}", r.baseline_cost),
                    format!("{:.2}", r.candidate_cost),
                    format!("{:.2}", r.improvement_pct),
                    format!("{:.2}", r.baseline_seconds),
                    format!("{:.2}", r.candidate_seconds),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| cells.iter().map(|c| c[i].len()).chain([header[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cols: Vec<&str>| -> String {
            cols.iter()
                .enumerate()
                .map(|(i, c)| {
                    if i < 2 {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(header.to_vec());
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for c in &cells {
            out.push_str(&line(c.iter().map(String::as_str).collect()));
            out.push('\n');
        }
        out.push_str(&format!(
            "seeds {:?}, max_iterations {:?}, max_seconds {:?}, {} instances\n",
            self.environment.seeds, self.environment.max_iterations, self.environment.max_seconds, self.environment.instances
        ));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "variant",
            "operator",
            "runs",
            "baseline_cost",
            "candidate_cost",
            "improvement_pct",
            "baseline_seconds",
            "candidate_seconds",
        ])
        .expect("in-memory csv");
        for r in &self.rows {
            w.write_record([
                r.variant.clone(),
                r.operator.clone(),
                r.runs.to_string(),
                format!("{:.2}", r.baseline_cost),
                format!("{:.2}", r.candidate_cost),
                format!("{:.2}", r.improvement_pct),
                format!("{:.2}", r.baseline_seconds),
                format!("{:.2}", r.candidate_seconds),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Per-run CSV for deeper analysis.
pub fn runs_csv(runs: &[RunRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "variant", "operator", "seed", "cost", "feasible", "seconds"])
        .expect("in-memory csv");
    for r in runs {
        w.write_record([
            r.instance.clone(),
            r.variant.clone(),
            r.operator.clone(),
            r.seed.to_string(),
            r.cost.to_string(),
            r.feasible.to_string(),
            format!("{:.4}", r.seconds),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}
