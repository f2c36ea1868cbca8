//! Text generators: the prompt goes in, a response with code comes out.

use std::collections::VecDeque;
use std::time::Duration;

use hgs_core::rng::derive_seed;
use hgs_core::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("generator unavailable: {0}")]
    Unavailable(String),
    #[error("unexpected generator reply: {0}")]
    BadReply(String),
}

/// Where a request sits in the run; deterministic mocks key off this.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RequestContext {
    pub run_seed: u64,
    pub generation: usize,
    pub offspring: usize,
    pub attempt: usize,
}

pub trait Generator: Send {
    fn describe(&self) -> String;

    fn generate(&mut self, prompt: &str, ctx: RequestContext) -> Result<String, GeneratorError>;
}

/// Replies from a fixed list, in order. Fails once the list runs out.
#[derive(Debug, Clone)]
pub struct ScriptedGenerator {
    replies: VecDeque<String>,
    repeat_last: bool,
}

impl ScriptedGenerator {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        ScriptedGenerator {
            replies: replies.into_iter().map(Into::into).collect(),
            repeat_last: false,
        }
    }

    /// Always answers with `reply`.
    pub fn repeating(reply: impl Into<String>) -> Self {
        ScriptedGenerator {
            replies: VecDeque::from([reply.into()]),
            repeat_last: true,
        }
    }
}

impl Generator for ScriptedGenerator {
    fn describe(&self) -> String {
        "scripted".into()
    }

    fn generate(&mut self, _prompt: &str, _ctx: RequestContext) -> Result<String, GeneratorError> {
        if self.repeat_last && self.replies.len() == 1 {
            return Ok(self.replies[0].clone());
        }
        self.replies
            .pop_front()
            .ok_or_else(|| GeneratorError::Unavailable("script exhausted".into()))
    }
}

/// Picks registry variants from a fixed list, seeded by the request context,
/// and answers with a registry document.
#[derive(Debug, Clone)]
pub struct LatticeGenerator {
    pub variants: Vec<String>,
}

impl LatticeGenerator {
    pub fn new<S: Into<String>>(variants: impl IntoIterator<Item = S>) -> Self {
        LatticeGenerator {
            variants: variants.into_iter().map(Into::into).collect(),
        }
    }

    /// Every built-in registry variant.
    pub fn registry() -> Self {
        LatticeGenerator::new(hgs_core::registry::entries().into_iter().map(|e| e.name))
    }
}

impl Generator for LatticeGenerator {
    fn describe(&self) -> String {
        format!("lattice[{}]", self.variants.join(","))
    }

    fn generate(&mut self, _prompt: &str, ctx: RequestContext) -> Result<String, GeneratorError> {
        if self.variants.is_empty() {
            return Err(GeneratorError::Unavailable("no variants to choose from".into()));
        }
        let stream = ((ctx.generation as u64) << 32) | ctx.offspring as u64;
        let mut rng = Rng::new(derive_seed(ctx.run_seed, stream));
        let name = &self.variants[rng.randint(self.variants.len())];
        let doc = json!({
            "registry": name,
            "hypothesis": format!("switching to {name} changes the quality/diversity balance"),
        });
        Ok(format!("```json\n{doc}\n```\n"))
    }
}

/// Feeds back responses captured in a run record.
#[derive(Debug, Clone)]
pub struct ReplayGenerator {
    name: String,
    responses: VecDeque<Result<String, String>>,
}

impl ReplayGenerator {
    pub fn new(responses: impl IntoIterator<Item = Result<String, String>>) -> Self {
        ReplayGenerator {
            name: "replay".into(),
            responses: responses.into_iter().collect(),
        }
    }

    /// Reports `name` from `describe`, so a replayed record matches the original.
    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

impl Generator for ReplayGenerator {
    fn describe(&self) -> String {
        self.name.clone()
    }

    fn generate(&mut self, _prompt: &str, _ctx: RequestContext) -> Result<String, GeneratorError> {
        match self.responses.pop_front() {
            Some(Ok(text)) => Ok(text),
            Some(Err(e)) => Err(GeneratorError::Unavailable(e)),
            None => Err(GeneratorError::Unavailable("recorded responses exhausted".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    /// A chat-completions style endpoint.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_seconds: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4.1".into(),
            temperature: 1.0,
            api_key_env: "MEP_API_KEY".into(),
            timeout_seconds: 300,
        }
    }
}

/// Chat-completions adapter over HTTP.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    pub config: HttpConfig,
}

impl HttpGenerator {
    pub fn new(config: HttpConfig) -> Self {
        HttpGenerator { config }
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        })
    }
}

/// The first choice's message text.
pub fn extract_content(reply: &Value) -> Result<String, GeneratorError> {
    reply
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| {
            let mut text = reply.to_string();
            text.truncate(200);
            GeneratorError::BadReply(text)
        })
}

impl Generator for HttpGenerator {
    fn describe(&self) -> String {
        format!("http:{}@{}", self.config.model, self.config.endpoint)
    }

    fn generate(&mut self, prompt: &str, _ctx: RequestContext) -> Result<String, GeneratorError> {
        let key = std::env::var(&self.config.api_key_env).map_err(|_| {
            GeneratorError::Unavailable(format!("environment variable {} is not set", self.config.api_key_env))
        })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.config.timeout_seconds)))
            .build()
            .into();
        let mut reply = agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(self.request_body(prompt))
            .map_err(|e| GeneratorError::Unavailable(e.to_string()))?;
        let value: Value = reply
            .body_mut()
            .read_json()
            .map_err(|e| GeneratorError::BadReply(e.to_string()))?;
        extract_content(&value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(generation: usize, offspring: usize) -> RequestContext {
        RequestContext {
            run_seed: 3,
            generation,
            offspring,
            attempt: 0,
        }
    }

    #[test]
    fn scripted_runs_out() {
        let mut g = ScriptedGenerator::new(["a", "b"]);
        assert_eq!(g.generate("", ctx(1, 0)).unwrap(), "a");
        assert_eq!(g.generate("", ctx(1, 1)).unwrap(), "b");
        assert!(matches!(g.generate("", ctx(1, 2)), Err(GeneratorError::Unavailable(_))));
        let mut r = ScriptedGenerator::repeating("x");
        for _ in 0..3 {
            assert_eq!(r.generate("", ctx(1, 0)).unwrap(), "x");
        }
    }

    #[test]
    fn lattice_is_a_function_of_context() {
        let mut g = LatticeGenerator::registry();
        let a = g.generate("p", ctx(2, 4)).unwrap();
        let b = g.generate("other prompt", ctx(2, 4)).unwrap();
        assert_eq!(a, b);
        let picks: std::collections::BTreeSet<String> =
            (0..40).map(|o| g.generate("", ctx(1, o)).unwrap()).collect();
        assert!(picks.len() > 3);
    }

    #[test]
    fn request_and_reply_shapes() {
        let g = HttpGenerator::new(HttpConfig::default());
        let body = g.request_body("hi");
        assert_eq!(body["temperature"], 1.0);
        assert_eq!(body["messages"][0]["content"], "hi");
        let reply = json!({"choices": [{"message": {"role": "assistant", "content": "ok"}}]});
        assert_eq!(extract_content(&reply).unwrap(), "ok");
        assert!(matches!(extract_content(&json!({})), Err(GeneratorError::BadReply(_))));
    }

    #[test]
    fn missing_credential_is_unavailable() {
        let mut g = HttpGenerator::new(HttpConfig {
            api_key_env: "HGS_MEP_TEST_SURELY_UNSET".into(),
            ..HttpConfig::default()
        });
        let err = g.generate("x", ctx(1, 0)).unwrap_err();
        assert!(err.to_string().contains("HGS_MEP_TEST_SURELY_UNSET"));
    }
}
