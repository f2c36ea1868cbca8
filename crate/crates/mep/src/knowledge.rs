//! Pitfalls, strategies and traps injected into the planning section.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_TEXT: &str = include_str!("../assets/knowledge.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KnowledgeError {
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: item outside of a section")]
    OrphanItem { line: usize },
    #[error("line {line}: expected \"- item\", a [section] header or a # comment")]
    Malformed { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub pitfalls: Vec<String>,
    pub strategies: Vec<String>,
    pub traps: Vec<String>,
}

impl KnowledgeBase {
    /// Parses the `[pitfalls]` / `[strategies]` / `[traps]` text format.
    pub fn parse(text: &str) -> Result<Self, KnowledgeError> {
        let mut kb = KnowledgeBase::default();
        let mut current: Option<&mut Vec<String>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(match name.trim() {
                    "pitfalls" => &mut kb.pitfalls,
                    "strategies" => &mut kb.strategies,
                    "traps" => &mut kb.traps,
                    other => {
                        return Err(KnowledgeError::UnknownSection {
                            line: lineno,
                            name: other.to_string(),
                        })
                    }
                });
                continue;
            }
            let Some(item) = line.strip_prefix("- ") else {
                return Err(KnowledgeError::Malformed { line: lineno });
            };
            match current.as_deref_mut() {
                Some(list) => list.push(item.trim().to_string()),
                None => return Err(KnowledgeError::OrphanItem { line: lineno }),
            }
        }
        Ok(kb)
    }

    pub fn is_complete(&self) -> bool {
        !self.pitfalls.is_empty() && !self.strategies.is_empty() && !self.traps.is_empty()
    }
}

/// The shipped knowledge asset.
pub fn default_knowledge() -> KnowledgeBase {
    KnowledgeBase::parse(DEFAULT_TEXT).expect("bundled knowledge parses")
}
