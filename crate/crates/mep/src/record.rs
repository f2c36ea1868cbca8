//! The persisted history of one evolution run, as JSON lines.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::candidate::Candidate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub config: Value,
    pub run_seed: u64,
    pub generator: String,
    pub evaluator: String,
}

/// One call to the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub response: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptLog {
    pub generation: usize,
    pub offspring: usize,
    pub candidate_id: Option<String>,
    pub parents: Vec<String>,
    pub prompt: String,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub survivors: Vec<String>,
    pub best_id: String,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub header: Option<RunHeader>,
    pub prompts: Vec<PromptLog>,
    /// Every candidate in creation order, base population first.
    pub candidates: Vec<Candidate>,
    pub generations: Vec<GenerationLog>,
    pub aborted: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(RunHeader),
    Prompt(PromptLog),
    Candidate(Candidate),
    Generation(GenerationLog),
    Aborted { message: String },
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl RunRecord {
    /// Best fitness after each generation.
    pub fn fitness_series(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.best_fitness).collect()
    }

    pub fn candidate(&self, id: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }

    /// Every recorded generator exchange, in call order.
    pub fn responses(&self) -> Vec<Result<String, String>> {
        self.prompts
            .iter()
            .flat_map(|p| &p.attempts)
            .map(|a| match (&a.response, &a.error) {
                (Some(r), _) => Ok(r.clone()),
                (None, e) => Err(e.clone().unwrap_or_default()),
            })
            .collect()
    }

    /// Lines are written header, then candidates and prompts as they
    /// happened per generation, then the generation summary.
    pub fn to_jsonl(&self) -> String {
        let mut lines: Vec<Line> = Vec::new();
        if let Some(h) = &self.header {
            lines.push(Line::Header(h.clone()));
        }
        let max_gen = self
            .candidates
            .iter()
            .map(|c| c.generation)
            .chain(self.prompts.iter().map(|p| p.generation))
            .chain(self.generations.iter().map(|g| g.generation))
            .max()
            .unwrap_or(0);
        for g in 0..=max_gen {
            lines.extend(self.prompts.iter().filter(|p| p.generation == g).cloned().map(Line::Prompt));
            lines.extend(self.candidates.iter().filter(|c| c.generation == g).cloned().map(Line::Candidate));
            lines.extend(self.generations.iter().filter(|l| l.generation == g).cloned().map(Line::Generation));
        }
        if let Some(message) = &self.aborted {
            lines.push(Line::Aborted {
                message: message.clone(),
            });
        }
        let mut out = String::new();
        for l in lines {
            out.push_str(&serde_json::to_string(&l).expect("record lines serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, RecordError> {
        let mut r = RunRecord::default();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|e| RecordError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match line {
                Line::Header(h) => r.header = Some(h),
                Line::Prompt(p) => r.prompts.push(p),
                Line::Candidate(c) => r.candidates.push(c),
                Line::Generation(g) => r.generations.push(g),
                Line::Aborted { message } => r.aborted = Some(message),
            }
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<(), RecordError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, RecordError> {
        RunRecord::from_jsonl(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidate::WORST_FITNESS;

    #[test]
    fn jsonl_round_trip_keeps_extreme_floats() {
        let mut base = Candidate::baseline();
        base.fitness = Some(-1234.567_890_123);
        base.feedback = Some("ok".into());
        let mut bad = Candidate::new("g1-o0", 1, None, Default::default());
        bad.fitness = Some(WORST_FITNESS);
        let r = RunRecord {
            header: Some(RunHeader {
                config: serde_json::json!({"generations": 1}),
                run_seed: 4,
                generator: "g".into(),
                evaluator: "e".into(),
            }),
            prompts: vec![PromptLog {
                generation: 1,
                offspring: 0,
                candidate_id: Some("g1-o0".into()),
                parents: vec!["base".into(), "base".into()],
                prompt: "p\nq".into(),
                attempts: vec![
                    Attempt {
                        response: None,
                        error: Some("down".into()),
                    },
                    Attempt {
                        response: Some("text".into()),
                        error: None,
                    },
                ],
            }],
            candidates: vec![base, bad],
            generations: vec![GenerationLog {
                generation: 1,
                survivors: vec!["base".into(), "g1-o0".into()],
                best_id: "base".into(),
                best_fitness: -1234.567_890_123,
            }],
            aborted: None,
        };
        let text = r.to_jsonl();
        assert_eq!(text.lines().count(), 5);
        let back = RunRecord::from_jsonl(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.responses(), vec![Err("down".into()), Ok("text".into())]);
        assert_eq!(back.fitness_series(), vec![-1234.567_890_123]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = RunRecord::from_jsonl("\n{\"type\": \"nope\"}").unwrap_err();
        assert!(matches!(err, RecordError::Parse { line: 2, .. }));
    }
}
