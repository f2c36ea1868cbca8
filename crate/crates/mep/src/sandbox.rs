//! Out-of-process parent selection over newline-delimited JSON.
//!
//! Each selection call sends one request line
//! `{"population": [[[client, ...], ...], ...], "costs": [...], "feasible": [...], "seed": u64, "k": 2}`
//! and expects one reply line `{"parent1_index": i, "parent2_index": j}`.
//! A reply of `{"error": "..."}` reports a failure inside the worker.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use hgs_core::hgs::{OperatorError, ParentSelector, Population};
use hgs_core::{CostEvaluator, Rng};
use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use thiserror::Error;

pub const WORKER_SOURCE: &str = include_str!("../assets/worker.py");

const STDERR_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SandboxError {
    #[error("could not start worker: {0}")]
    Spawn(String),
    #[error("timeout: {0}")]
    Timeout(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("worker error: {0}")]
    Worker(String),
    #[error("worker exited{0}")]
    Exited(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxConfig {
    /// Program and arguments. `{worker}` expands to the bundled worker script
    /// and `{candidate}` to the candidate source file.
    pub command: Vec<String>,
    /// Longest wait for one reply.
    pub reply_timeout_seconds: f64,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            command: vec!["python3".into(), "{worker}".into(), "{candidate}".into()],
            reply_timeout_seconds: 10.0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Request {
    pub population: Vec<Vec<Vec<usize>>>,
    pub costs: Vec<i64>,
    pub feasible: Vec<bool>,
    pub seed: u64,
    pub k: usize,
}

impl Request {
    pub fn snapshot(population: &Population, seed: u64, k: usize) -> Self {
        let members = population.members();
        Request {
            population: members.iter().map(|m| m.solution.route_visits()).collect(),
            costs: members.iter().map(|m| m.cost).collect(),
            feasible: members.iter().map(|m| m.feasible).collect(),
            seed,
            k,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Reply {
    parent1_index: Option<i64>,
    parent2_index: Option<i64>,
    error: Option<String>,
}

/// Checks one reply line against a population of `len` members.
pub fn parse_reply(line: &str, len: usize) -> Result<(usize, usize), SandboxError> {
    let reply: Reply = serde_json::from_str(line.trim())
        .map_err(|e| SandboxError::Protocol(format!("{e} in reply {:?}", truncate(line, 120))))?;
    if let Some(e) = reply.error {
        return Err(SandboxError::Worker(e));
    }
    let index = |v: Option<i64>, field: &str| -> Result<usize, SandboxError> {
        let v = v.ok_or_else(|| SandboxError::Protocol(format!("reply lacks {field}")))?;
        usize::try_from(v)
            .ok()
            .filter(|&i| i < len)
            .ok_or_else(|| SandboxError::Protocol(format!("{field} {v} out of range for population of {len}")))
    };
    Ok((index(reply.parent1_index, "parent1_index")?, index(reply.parent2_index, "parent2_index")?))
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    stderr: Arc<Mutex<String>>,
    _dir: TempDir,
}

impl Worker {
    fn spawn(config: &SandboxConfig, source: &str) -> Result<Worker, SandboxError> {
        let spawn_err = |e: std::io::Error| SandboxError::Spawn(e.to_string());
        let dir = tempfile::tempdir().map_err(spawn_err)?;
        let worker_path = dir.path().join("worker.py");
        let candidate_path = dir.path().join("candidate.py");
        std::fs::write(&worker_path, WORKER_SOURCE).map_err(spawn_err)?;
        std::fs::write(&candidate_path, source).map_err(spawn_err)?;
        let expand = |arg: &str| -> String {
            arg.replace("{worker}", &path_str(&worker_path))
                .replace("{candidate}", &path_str(&candidate_path))
        };
        let (program, args) = config
            .command
            .split_first()
            .ok_or_else(|| SandboxError::Spawn("empty command".into()))?;
        let mut child = Command::new(expand(program))
            .args(args.iter().map(|a| expand(a)))
            .current_dir(dir.path())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SandboxError::Spawn(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr_pipe = child.stderr.take().expect("piped stderr");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 1024];
            while let Ok(n) = stderr_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut s = sink.lock().expect("stderr lock");
                s.push_str(&String::from_utf8_lossy(&buf[..n]));
                if s.len() > STDERR_LIMIT {
                    let cut = s.len() - STDERR_LIMIT;
                    let cut = (cut..s.len()).find(|&i| s.is_char_boundary(i)).unwrap_or(s.len());
                    s.drain(..cut);
                }
            }
        });
        Ok(Worker {
            child,
            stdin,
            lines,
            stderr,
            _dir: dir,
        })
    }

    fn stderr_tail(&self) -> String {
        // Give the stderr reader a moment to drain after a crash.
        thread::sleep(Duration::from_millis(50));
        let s = self.stderr.lock().expect("stderr lock");
        let t = s.trim();
        if t.is_empty() {
            String::new()
        } else {
            format!(": {t}")
        }
    }

    fn exchange(&mut self, request: &str, timeout: Duration, len: usize) -> Result<(usize, usize), SandboxError> {
        if writeln!(self.stdin, "{request}").and_then(|_| self.stdin.flush()).is_err() {
            return Err(SandboxError::Exited(self.stderr_tail()));
        }
        match self.lines.recv_timeout(timeout) {
            Ok(line) => parse_reply(&line, len),
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                Err(SandboxError::Timeout(format!("no reply within {:.1}s", timeout.as_secs_f64())))
            }
            Err(RecvTimeoutError::Disconnected) => Err(SandboxError::Exited(self.stderr_tail())),
        }
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// A parent selector backed by one worker process. The first failure is
/// sticky: later calls fail with the same error.
pub struct SandboxSelector {
    worker: Mutex<Result<Worker, SandboxError>>,
    reply_timeout: Duration,
    deadline: Option<Instant>,
    exchanges: Mutex<u64>,
}

impl SandboxSelector {
    pub fn start(config: &SandboxConfig, source: &str, deadline: Option<Instant>) -> Result<Self, SandboxError> {
        let worker = Worker::spawn(config, source)?;
        Ok(SandboxSelector {
            worker: Mutex::new(Ok(worker)),
            reply_timeout: Duration::from_secs_f64(config.reply_timeout_seconds.max(0.001)),
            deadline,
            exchanges: Mutex::new(0),
        })
    }

    pub fn exchanges(&self) -> u64 {
        *self.exchanges.lock().expect("counter lock")
    }

    /// The sticky failure, if any.
    pub fn failure(&self) -> Option<SandboxError> {
        self.worker.lock().expect("worker lock").as_ref().err().cloned()
    }
}

impl ParentSelector for SandboxSelector {
    fn name(&self) -> &str {
        "sandbox"
    }

    fn select(
        &self,
        population: &Population,
        rng: &mut Rng,
        _evaluator: &CostEvaluator,
        k: usize,
    ) -> Result<(usize, usize), OperatorError> {
        if k != 2 {
            return Err(OperatorError::UnsupportedK(k));
        }
        if population.len() < 2 {
            return Err(OperatorError::PopulationTooSmall(population.len()));
        }
        let seed = rng.next_u64() >> 11;
        let mut slot = self.worker.lock().expect("worker lock");
        let worker = match slot.as_mut() {
            Ok(w) => w,
            Err(e) => return Err(OperatorError::Failed(e.to_string())),
        };
        let mut timeout = self.reply_timeout;
        if let Some(deadline) = self.deadline {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                let e = SandboxError::Timeout("evaluation time limit reached".into());
                *slot = Err(e.clone());
                return Err(OperatorError::Failed(e.to_string()));
            }
            timeout = timeout.min(left);
        }
        let request = serde_json::to_string(&Request::snapshot(population, seed, k)).expect("request serializes");
        *self.exchanges.lock().expect("counter lock") += 1;
        match worker.exchange(&request, timeout, population.len()) {
            Ok(pair) => Ok(pair),
            Err(e) => {
                *slot = Err(e.clone());
                Err(OperatorError::Failed(e.to_string()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_validation() {
        assert_eq!(parse_reply(r#"{"parent1_index": 1, "parent2_index": 0}"#, 2), Ok((1, 0)));
        assert!(matches!(parse_reply("not json", 2), Err(SandboxError::Protocol(_))));
        assert!(matches!(parse_reply(r#"{"parent1_index": 1}"#, 2), Err(SandboxError::Protocol(_))));
        assert!(matches!(
            parse_reply(r#"{"parent1_index": 2, "parent2_index": 0}"#, 2),
            Err(SandboxError::Protocol(_))
        ));
        assert!(matches!(
            parse_reply(r#"{"parent1_index": -1, "parent2_index": 0}"#, 2),
            Err(SandboxError::Protocol(_))
        ));
        assert!(matches!(
            parse_reply(r#"{"parent1_index": 0, "parent2_index": 1, "extra": true}"#, 2),
            Err(SandboxError::Protocol(_))
        ));
        assert_eq!(parse_reply(r#"{"error": "boom"}"#, 2), Err(SandboxError::Worker("boom".into())));
    }

    #[test]
    fn missing_program_is_a_spawn_error() {
        let config = SandboxConfig {
            command: vec!["/nonexistent/interpreter".into()],
            ..SandboxConfig::default()
        };
        assert!(matches!(
            SandboxSelector::start(&config, "", None),
            Err(SandboxError::Spawn(_))
        ));
    }
}
