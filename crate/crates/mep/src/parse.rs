//! Extracting a candidate from a generator response.

use serde::Deserialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::candidate::Payload;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no code block in response")]
    NoCodeBlock,
    #[error("expected a single code block, found {0}")]
    MultipleCodeBlocks(usize),
    #[error("code block is empty")]
    EmptyCodeBlock,
    #[error("invalid registry document: {0}")]
    InvalidRegistryDocument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub payload: Payload,
    pub hypothesis: Option<String>,
    pub reflection: Option<String>,
}

/// The JSON form mock generators emit instead of source code.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryDoc {
    #[serde(alias = "base")]
    registry: String,
    #[serde(default)]
    params: Map<String, Value>,
    hypothesis: Option<String>,
    reflection: Option<String>,
}

struct Block {
    lang: String,
    body: String,
}

/// Splits `text` into fenced blocks and the prose around them. An unclosed
/// fence is treated as prose.
fn split(text: &str) -> (Vec<Block>, Vec<String>) {
    let mut blocks = Vec::new();
    let mut prose = Vec::new();
    let mut open: Option<(Block, Vec<String>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match open.take() {
            None => {
                if let Some(lang) = trimmed.strip_prefix("```") {
                    let block = Block {
                        lang: lang.trim().to_ascii_lowercase(),
                        body: String::new(),
                    };
                    open = Some((block, vec![line.to_string()]));
                } else {
                    prose.push(line.to_string());
                }
            }
            Some((mut block, mut raw)) => {
                if trimmed.trim_end() == "```" {
                    blocks.push(block);
                } else {
                    block.body.push_str(line);
                    block.body.push('\n');
                    raw.push(line.to_string());
                    open = Some((block, raw));
                }
            }
        }
    }
    if let Some((_, raw)) = open {
        prose.extend(raw);
    }
    (blocks, prose)
}

fn registry_doc(text: &str) -> Option<Result<RegistryDoc, String>> {
    let value: Value = serde_json::from_str(text.trim()).ok()?;
    let obj = value.as_object()?;
    if !obj.contains_key("registry") && !obj.contains_key("base") {
        return None;
    }
    Some(serde_json::from_value(value).map_err(|e| e.to_string()))
}

fn label_value<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let stripped = line.trim().trim_start_matches(['#', '*', '-', '>', ' ']);
    let lower = stripped.to_ascii_lowercase();
    let at = lower
        .strip_prefix(label)
        .or_else(|| lower.strip_prefix(&format!("design {label}")))?;
    let offset = stripped.len() - at.len();
    let rest = stripped[offset..].trim_start_matches('*');
    let rest = rest.strip_prefix(':')?;
    Some(rest.trim().trim_matches('*').trim())
}

/// The text after `label:`, or the next non-empty line when the label stands
/// alone. With `to_end` the following prose lines are kept too.
fn labelled(prose: &[String], label: &str, to_end: bool) -> Option<String> {
    let start = prose.iter().position(|l| label_value(l, label).is_some())?;
    let mut parts: Vec<&str> = Vec::new();
    let first = label_value(&prose[start], label).unwrap_or("");
    if !first.is_empty() {
        parts.push(first);
    }
    for line in &prose[start + 1..] {
        let l = line.trim();
        if l.is_empty() {
            if parts.is_empty() {
                continue;
            }
            if !to_end {
                break;
            }
        }
        if !parts.is_empty() && !to_end {
            break;
        }
        parts.push(l);
    }
    let text = parts.join("\n").trim().to_string();
    (!text.is_empty()).then_some(text)
}

/// Pulls the single code block (or a registry JSON document) out of a
/// response, along with any hypothesis and reflection prose.
pub fn parse_generator_response(text: &str) -> Result<ParsedResponse, ParseError> {
    let (blocks, prose) = split(text);
    let hypothesis = labelled(&prose, "hypothesis", false);
    let reflection = labelled(&prose, "reflection", true);
    let from_doc = |doc: RegistryDoc| ParsedResponse {
        payload: Payload::RegistryParams {
            base: doc.registry,
            params: doc.params,
        },
        hypothesis: doc.hypothesis.or(hypothesis.clone()),
        reflection: doc.reflection.or(reflection.clone()),
    };

    match blocks.len() {
        0 => match registry_doc(text) {
            Some(Ok(doc)) => Ok(from_doc(doc)),
            Some(Err(e)) => Err(ParseError::InvalidRegistryDocument(e)),
            None => Err(ParseError::NoCodeBlock),
        },
        1 => {
            let block = &blocks[0];
            if block.body.trim().is_empty() {
                return Err(ParseError::EmptyCodeBlock);
            }
            match registry_doc(&block.body) {
                Some(Ok(doc)) => Ok(from_doc(doc)),
                Some(Err(e)) => Err(ParseError::InvalidRegistryDocument(e)),
                None if block.lang == "json" => Err(ParseError::InvalidRegistryDocument(
                    "json block without a \"registry\" key".into(),
                )),
                None => Ok(ParsedResponse {
                    payload: Payload::ExternalSource {
                        source: block.body.clone(),
                    },
                    hypothesis,
                    reflection,
                }),
            }
        }
        n => Err(ParseError::MultipleCodeBlocks(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_becomes_source() {
        let r = parse_generator_response("Intro\n```python\ndef select_parents():\n    pass\n```\n").unwrap();
        assert_eq!(
            r.payload,
            Payload::ExternalSource {
                source: "def select_parents():\n    pass\n".into()
            }
        );
        assert_eq!(r.hypothesis, None);
    }

    #[test]
    fn block_counts() {
        assert_eq!(parse_generator_response("just words"), Err(ParseError::NoCodeBlock));
        assert_eq!(parse_generator_response("```\nunclosed"), Err(ParseError::NoCodeBlock));
        assert_eq!(
            parse_generator_response("```\na\n```\ntext\n```py\nb\n```"),
            Err(ParseError::MultipleCodeBlocks(2))
        );
        assert_eq!(parse_generator_response("```python\n\n```"), Err(ParseError::EmptyCodeBlock));
    }

    #[test]
    fn registry_documents() {
        let r = parse_generator_response(r#"{"registry": "hybrid", "params": {"noise": 0.0}}"#).unwrap();
        match r.payload {
            Payload::RegistryParams { base, params } => {
                assert_eq!(base, "hybrid");
                assert_eq!(params["noise"], 0.0);
            }
            other => panic!("{other:?}"),
        }
        let r = parse_generator_response("**Hypothesis:** fewer ties\n```json\n{\"base\": \"baseline\"}\n```").unwrap();
        assert_eq!(r.payload, Payload::registry("baseline"));
        assert_eq!(r.hypothesis.as_deref(), Some("fewer ties"));
        assert!(matches!(
            parse_generator_response("```json\n{\"registry\": 3}\n```"),
            Err(ParseError::InvalidRegistryDocument(_))
        ));
        assert!(matches!(
            parse_generator_response("```json\n{\"a\": 1}\n```"),
            Err(ParseError::InvalidRegistryDocument(_))
        ));
    }

    #[test]
    fn hypothesis_and_reflection_from_prose() {
        let text = "Design Hypothesis:\nMixing strata keeps diversity.\n\n```python\nx = 1\n```\n\nReflection: covers collapse.\nStill weak on time windows.\n";
        let r = parse_generator_response(text).unwrap();
        assert_eq!(r.hypothesis.as_deref(), Some("Mixing strata keeps diversity."));
        assert_eq!(
            r.reflection.as_deref(),
            Some("covers collapse.\nStill weak on time windows.")
        );
    }
}
