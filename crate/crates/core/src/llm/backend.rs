//! LLM backends: a deterministic mock and a chat-completions HTTP client.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::RenderedPrompt;
use crate::corpus::{find_subsequence, tokenize, InstancePair};
use crate::{Error, Result};

/// One prompt plus the pair it was rendered from.
#[derive(Debug, Clone, Copy)]
pub struct LlmRequest<'a> {
    pub pair: &'a InstancePair,
    pub prompt: &'a RenderedPrompt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendResponse {
    pub raw: String,
    pub model: String,
    pub ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendError {
    /// Worth retrying: network failure, timeout, 429 or 5xx.
    Transient(String),
    /// Retrying will not help: bad credentials, malformed request.
    Fatal(String),
}

impl std::fmt::Display for BackendError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendError::Transient(m) => write!(f, "transient backend error: {m}"),
            BackendError::Fatal(m) => write!(f, "backend error: {m}"),
        }
    }
}

pub trait LlmBackend: Sync {
    fn complete(&self, request: LlmRequest<'_>) -> std::result::Result<BackendResponse, BackendError>;
}

pub const MOCK_MODEL: &str = "mock-jaccard";
pub const MOCK_RADIUS: usize = 5;
pub const MOCK_THRESHOLD: f64 = 0.2;

/// Answers `1` when the token neighborhoods around the target in the two
/// texts have Jaccard overlap at least [`MOCK_THRESHOLD`], else `0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

/// Tokens within `radius` of the first target occurrence, target excluded.
pub fn target_neighborhood(text: &str, target: &[String], radius: usize) -> HashSet<String> {
    let tokens = tokenize(text);
    let Some(start) = find_subsequence(&tokens, target) else {
        return HashSet::new();
    };
    let end = start + target.len();
    let lo = start.saturating_sub(radius);
    let hi = (end + radius).min(tokens.len());
    tokens[lo..start].iter().chain(&tokens[end..hi]).cloned().collect()
}

/// |A ∩ B| / |A ∪ B|, with two empty sets counting as identical.
pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

impl MockBackend {
    pub fn verdict(pair: &InstancePair) -> u8 {
        let target = pair.target_tokens();
        let a = target_neighborhood(&pair.text1, &target, MOCK_RADIUS);
        let b = target_neighborhood(&pair.text2, &target, MOCK_RADIUS);
        u8::from(jaccard(&a, &b) >= MOCK_THRESHOLD)
    }
}

impl LlmBackend for MockBackend {
    fn complete(&self, request: LlmRequest<'_>) -> std::result::Result<BackendResponse, BackendError> {
        Ok(BackendResponse {
            raw: Self::verdict(request.pair).to_string(),
            model: MOCK_MODEL.to_string(),
            // wall-clock time would make reruns differ
            ms: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub parallelism: usize,
    pub timeout_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            api_key_env: "SEMSHIFT_API_KEY".into(),
            max_retries: 3,
            backoff_base_ms: 500,
            parallelism: 4,
            timeout_ms: 60_000,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.parallelism == 0 {
            return Err(Error::invalid("parallelism", "must be at least 1"));
        }
        if self.endpoint.is_empty() {
            return Err(Error::invalid("endpoint", "must not be empty"));
        }
        if self.model.is_empty() {
            return Err(Error::invalid("model", "must not be empty"));
        }
        if self.timeout_ms == 0 {
            return Err(Error::invalid("timeout_ms", "must be positive"));
        }
        Ok(())
    }
}

/// Chat-completions client. Temperature is pinned to 0.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    config: BackendConfig,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!(
                "{} is not set; sending requests without authorization",
                config.api_key_env
            );
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| Error::invalid("endpoint", format!("cannot build HTTP client: {e}")))?;
        Ok(HttpBackend {
            client,
            config,
            api_key,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }
}

/// First choice's text from a chat-completions (or legacy completions) body.
pub fn extract_completion(body: &serde_json::Value) -> Option<&str> {
    let choice = body.get("choices")?.get(0)?;
    choice
        .get("message")
        .and_then(|m| m.get("content"))
        .or_else(|| choice.get("text"))
        .and_then(|c| c.as_str())
}

impl LlmBackend for HttpBackend {
    fn complete(&self, request: LlmRequest<'_>) -> std::result::Result<BackendResponse, BackendError> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": request.prompt.context},
                {"role": "user", "content": request.prompt.query},
            ],
        });
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let started = Instant::now();
        let resp = req.send().map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(BackendError::Fatal(format!("HTTP {status}: {text}")));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| BackendError::Transient(format!("unreadable response body: {e}")))?;
        let ms = started.elapsed().as_millis() as u64;
        let raw = extract_completion(&value)
            .ok_or_else(|| BackendError::Fatal(format!("no completion text in response: {value}")))?
            .to_string();
        let model = value
            .get("model")
            .and_then(|m| m.as_str())
            .unwrap_or(&self.config.model)
            .to_string();
        Ok(BackendResponse { raw, model, ms })
    }
}
