use std::time::Duration;

use log::{debug, warn};
use serde::Serialize;
use serde_json::Value;

use super::{build_prompt, parse_decision, ChatMessage, CognitiveCore, CognitiveDecision, CognitiveInput, CoreError, PromptConfig};

pub const ENV_MODEL_ENDPOINT: &str = "SMART_TCP_MODEL_ENDPOINT";
pub const ENV_MODEL_KEY: &str = "SMART_TCP_MODEL_KEY";

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
    /// Extra attempts after a malformed answer.
    pub malformed_retries: u32,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            api_key: None,
            model: "smart-tcp".to_string(),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
            malformed_retries: 1,
        }
    }

    /// Endpoint and key from `SMART_TCP_MODEL_ENDPOINT` / `SMART_TCP_MODEL_KEY`.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var(ENV_MODEL_ENDPOINT).ok().filter(|s| !s.is_empty())?;
        let mut cfg = RemoteConfig::new(endpoint);
        cfg.api_key = std::env::var(ENV_MODEL_KEY).ok().filter(|s| !s.is_empty());
        Some(cfg)
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage>,
    temperature: f64,
}

/// Decision core backed by a chat-completion style HTTP endpoint.
///
/// The client is `Sync`; concurrent sessions share one connection pool and
/// every request carries its own timeout.
pub struct RemoteCore {
    agent: ureq::Agent,
    config: RemoteConfig,
    prompt: PromptConfig,
}

impl RemoteCore {
    pub fn new(config: RemoteConfig, prompt: PromptConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(true)
            .build()
            .into();
        RemoteCore { agent, config, prompt }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Sends the prompt for `input` and returns the generated text.
    pub fn complete(&self, input: &CognitiveInput) -> Result<String, CoreError> {
        let bundle = build_prompt(input, &self.prompt);
        let body = ChatRequest { model: &self.config.model, messages: bundle.messages(), temperature: self.config.temperature };
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| CoreError::Transport(e.to_string()))?;
        let value: Value = resp.body_mut().read_json().map_err(|e| CoreError::Transport(e.to_string()))?;
        generated_text(&value)
            .map(str::to_owned)
            .ok_or_else(|| CoreError::Transport("response carries no generated text".into()))
    }
}

/// Locates the generated text in the common response shapes.
fn generated_text(v: &Value) -> Option<&str> {
    let candidates = [
        v.pointer("/choices/0/message/content"),
        v.pointer("/choices/0/text"),
        v.pointer("/message/content"),
        v.get("response"),
        v.get("content"),
        v.get("text"),
        v.get("output_text"),
    ];
    candidates.into_iter().flatten().find_map(Value::as_str)
}

impl CognitiveCore for RemoteCore {
    fn decide(&self, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError> {
        let mut attempt = 0;
        loop {
            let text = self.complete(input)?;
            match parse_decision(&text) {
                Ok(d) => return Ok(d),
                Err(e) if attempt < self.config.malformed_retries => {
                    debug!("malformed model output, retrying: {}", e.reason);
                    attempt += 1;
                }
                Err(e) => {
                    warn!("malformed model output after {} attempts: {}", attempt + 1, e.reason);
                    return Err(CoreError::Malformed(e));
                }
            }
        }
    }

    fn name(&self) -> &str {
        "remote"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn finds_text_in_known_shapes() {
        assert_eq!(generated_text(&json!({"choices":[{"message":{"content":"a"}}]})), Some("a"));
        assert_eq!(generated_text(&json!({"choices":[{"text":"b"}]})), Some("b"));
        assert_eq!(generated_text(&json!({"response":"c"})), Some("c"));
        assert_eq!(generated_text(&json!({"nothing":1})), None);
    }
}
