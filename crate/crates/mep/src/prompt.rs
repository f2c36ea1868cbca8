//! Prompt assembly for the parent-selection plug-point.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::Candidate;
use crate::knowledge::KnowledgeBase;

const SELECT_PARENTS_TEMPLATE: &str = include_str!("../assets/select_parents_prompt.md");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unsubstituted placeholder(s): {}", .0.iter().map(|p| format!("${p}")).collect::<Vec<_>>().join(", "))]
    UnsubstitutedPlaceholder(Vec<String>),
    #[error("full mode needs non-empty pitfalls, strategies and traps")]
    IncompleteKnowledge,
    #[error("template has no section {0:?}")]
    MissingSection(String),
    #[error("template line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    #[default]
    Full,
    /// Full prompt without the planning section.
    #[serde(alias = "noInit")]
    NoInit,
    /// Parents and scores only.
    Reactive,
}

impl PromptMode {
    pub fn sections(self) -> &'static [&'static str] {
        match self {
            PromptMode::Full => &[
                "role",
                "planning",
                "objective",
                "context",
                "approaches",
                "reasoning",
                "task",
                "requirements",
                "inputs",
                "reference",
                "reflection",
                "format",
            ],
            PromptMode::NoInit => &[
                "role",
                "objective",
                "context",
                "approaches",
                "reasoning",
                "task",
                "requirements",
                "inputs",
                "reference",
                "reflection",
                "format",
            ],
            PromptMode::Reactive => &["reactive_task", "reactive_inputs"],
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::Full => "full",
            PromptMode::NoInit => "noinit",
            PromptMode::Reactive => "reactive",
        })
    }
}

impl FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(PromptMode::Full),
            "noinit" => Ok(PromptMode::NoInit),
            "reactive" => Ok(PromptMode::Reactive),
            _ => Err(format!("unknown prompt mode {s:?} (expected full, noinit or reactive)")),
        }
    }
}

/// A template split into `@@ name` sections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    sections: BTreeMap<String, String>,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut sections = BTreeMap::new();
        let mut current: Option<(String, String)> = None;
        for (i, line) in text.lines().enumerate() {
            if let Some(name) = line.strip_prefix("@@ ") {
                if let Some((n, body)) = current.take() {
                    sections.insert(n, body.trim().to_string());
                }
                let name = name.trim().to_string();
                if sections.contains_key(&name) {
                    return Err(PromptError::Malformed {
                        line: i + 1,
                        message: format!("duplicate section {name:?}"),
                    });
                }
                current = Some((name, String::new()));
            } else if let Some((_, body)) = current.as_mut() {
                body.push_str(line);
                body.push('\n');
            } else if !line.trim().is_empty() {
                return Err(PromptError::Malformed {
                    line: i + 1,
                    message: "text before the first section".into(),
                });
            }
        }
        if let Some((n, body)) = current {
            sections.insert(n, body.trim().to_string());
        }
        Ok(Template { sections })
    }

    /// The shipped parent-selection template.
    pub fn select_parents() -> Self {
        Template::parse(SELECT_PARENTS_TEMPLATE).expect("bundled template parses")
    }

    pub fn section(&self, name: &str) -> Option<&str> {
        self.sections.get(name).map(String::as_str)
    }
}

/// Replaces `$name` and `${name}` tokens; `$$` is a literal dollar. Inserted
/// values are not scanned again. Returns the names that had no value.
pub fn substitute(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String, Vec<String>> {
    let mut out = String::with_capacity(text.len());
    let mut missing = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find('$') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        if let Some(tail) = after.strip_prefix('$') {
            out.push('$');
            rest = tail;
            continue;
        }
        let (name, consumed) = if let Some(braced) = after.strip_prefix('{') {
            match braced.find('}') {
                Some(end) if is_identifier(&braced[..end]) => (&braced[..end], end + 2),
                _ => ("", 0),
            }
        } else {
            let end = after
                .char_indices()
                .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
                .map_or(after.len(), |(i, _)| i);
            (&after[..end], end)
        };
        if name.is_empty() {
            out.push('$');
            rest = after;
            continue;
        }
        match lookup(name) {
            Some(value) => out.push_str(&value),
            None => {
                if !missing.iter().any(|m| m == name) {
                    missing.push(name.to_string());
                }
                out.push('$');
                out.push_str(&after[..consumed]);
            }
        }
        rest = &after[consumed..];
    }
    out.push_str(rest);
    if missing.is_empty() {
        Ok(out)
    } else {
        Err(missing)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c == '_' || c.is_ascii_alphabetic())
        && chars.all(|c| c == '_' || c.is_ascii_alphanumeric())
}

fn bullets(items: &[String]) -> String {
    items.iter().map(|i| format!("- {i}")).collect::<Vec<_>>().join("\n")
}

fn score_text(c: &Candidate) -> Option<String> {
    match c.fitness {
        None => None,
        Some(_) if c.failed() => Some("n/a (evaluation failed)".to_string()),
        Some(f) => Some(format!("{:.2}", -f)),
    }
}

/// Renders the prompt for one offspring.
pub fn render_prompt(
    template: &Template,
    mode: PromptMode,
    parents: (&Candidate, &Candidate),
    baseline_score: f64,
    knowledge: &KnowledgeBase,
) -> Result<String, PromptError> {
    if mode == PromptMode::Full && !knowledge.is_complete() {
        return Err(PromptError::IncompleteKnowledge);
    }
    let mut parts = Vec::new();
    for &name in mode.sections() {
        let body = template
            .section(name)
            .ok_or_else(|| PromptError::MissingSection(name.to_string()))?;
        parts.push(body);
    }
    let text = parts.join("\n\n") + "\n";

    let (p1, p2) = parents;
    let lookup = |name: &str| -> Option<String> {
        match name {
            "code1" => Some(p1.code_text()),
            "code2" => Some(p2.code_text()),
            "score1" => score_text(p1),
            "score2" => score_text(p2),
            "feedback1" => p1.feedback.clone(),
            "feedback2" => p2.feedback.clone(),
            "baseline_score" => Some(format!("{baseline_score:.2}")),
            "pitfalls" => Some(bullets(&knowledge.pitfalls)),
            "strategies" => Some(bullets(&knowledge.strategies)),
            "traps" => Some(bullets(&knowledge.traps)),
            _ => None,
        }
    };
    substitute(&text, lookup).map_err(PromptError::UnsubstitutedPlaceholder)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_rules() {
        let map = |n: &str| (n == "a").then(|| "X$b".to_string());
        assert_eq!(substitute("$a ${a} $$a", map), Ok("X$b X$b $a".into()));
        assert_eq!(substitute("cost $5 and $ alone", map), Ok("cost $5 and $ alone".into()));
        assert_eq!(substitute("$a $zz ${zz} $q1", map), Err(vec!["zz".into(), "q1".into()]));
    }

    #[test]
    fn template_sections_cover_every_mode() {
        let t = Template::select_parents();
        for mode in [PromptMode::Full, PromptMode::NoInit, PromptMode::Reactive] {
            for s in mode.sections() {
                assert!(t.section(s).is_some(), "{s}");
            }
        }
    }

    #[test]
    fn malformed_templates_are_rejected() {
        assert!(matches!(Template::parse("hello\n@@ a\n"), Err(PromptError::Malformed { line: 1, .. })));
        assert!(matches!(Template::parse("@@ a\nx\n@@ a\n"), Err(PromptError::Malformed { line: 3, .. })));
    }

    #[test]
    fn mode_names_parse() {
        assert_eq!("noInit".parse::<PromptMode>(), Ok(PromptMode::NoInit));
        assert_eq!("REACTIVE".parse::<PromptMode>(), Ok(PromptMode::Reactive));
        assert!("other".parse::<PromptMode>().is_err());
        assert_eq!(serde_json::from_str::<PromptMode>("\"noInit\"").unwrap(), PromptMode::NoInit);
    }
}
