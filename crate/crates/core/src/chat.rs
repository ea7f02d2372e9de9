//! Minimal chat-completion client shared by the classifier, the reward
//! scorer and the answer call.

use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "FRAMESIEVE_API_KEY";
/// Environment variable holding the default endpoint URL.
pub const ENDPOINT_ENV: &str = "FRAMESIEVE_ENDPOINT";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChatError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// One user turn. Images are sent as base64 JPEG data URLs after the text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChatRequest {
    pub text: String,
    pub images: Vec<Vec<u8>>,
}

impl ChatRequest {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn with_image(mut self, jpeg: Vec<u8>) -> Self {
        self.images.push(jpeg);
        self
    }
}

/// Anything that can answer a single-turn chat request.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError>;
}

impl<T: ChatClient + ?Sized> ChatClient for &T {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        (**self).complete(request)
    }
}

impl<T: ChatClient + ?Sized> ChatClient for Box<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub timeout_ms: u64,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key: None,
            timeout_ms: 60_000,
        }
    }

    /// Picks up the bearer token from [`API_KEY_ENV`].
    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }
}

/// Chat-completions wire body: text part first, then one `image_url` part
/// per image. Temperature is pinned to 0.
pub fn request_body(model: &str, request: &ChatRequest) -> Value {
    let mut content = vec![json!({"type": "text", "text": request.text})];
    for image in &request.images {
        let encoded = base64::engine::general_purpose::STANDARD.encode(image);
        content.push(json!({
            "type": "image_url",
            "image_url": {"url": format!("data:image/jpeg;base64,{encoded}")}
        }));
    }
    json!({
        "model": model,
        "temperature": 0,
        "messages": [{"role": "user", "content": content}],
    })
}

/// Reads `choices[0].message.content` from a chat-completions response.
pub fn response_content(body: &Value) -> Result<String, ChatError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| ChatError::Malformed("missing choices[0].message.content".into()))
}

pub struct HttpChatClient {
    config: EndpointConfig,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(config: EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self { config, agent }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        let body = request_body(&self.config.model, request);
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(ChatError::Status(status));
        }
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| ChatError::Malformed(e.to_string()))?;
        response_content(&value)
    }
}

/// Per-request retry with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff_ms: 500,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn no_wait(attempts: u32) -> Self {
        Self {
            attempts,
            initial_backoff_ms: 0,
            max_backoff_ms: 0,
        }
    }

    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(
            self.initial_backoff_ms
                .saturating_mul(factor)
                .min(self.max_backoff_ms),
        )
    }

    /// Runs `op` until it succeeds or attempts run out, returning the last
    /// error on exhaustion.
    pub fn run<T, E>(&self, mut op: impl FnMut() -> Result<T, E>) -> Result<T, E> {
        let attempts = self.attempts.max(1);
        let mut attempt = 1;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if attempt >= attempts => return Err(e),
                Err(_) => {
                    std::thread::sleep(self.backoff(attempt));
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("no JSON object found in response")]
    NoJson,
}

/// First balanced `{...}` in `text` that parses as a JSON object. Tolerates
/// surrounding prose and code fences.
pub fn extract_json_object(text: &str) -> Result<serde_json::Map<String, Value>, ExtractError> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(offset) = text[start..].find('{') {
        let open = start + offset;
        if let Some(close) = matching_brace(bytes, open) {
            if let Ok(Value::Object(map)) = serde_json::from_str(&text[open..=close]) {
                return Ok(map);
            }
        }
        start = open + 1;
    }
    Err(ExtractError::NoJson)
}

fn matching_brace(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}
