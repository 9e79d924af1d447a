//! Blocking chat-completion client.
//!
//! Request body:
//!
//! ```json
//! {"model": "m", "messages": [{"role": "user", "content": "hi"}], "temperature": 0.0}
//! ```
//!
//! Response body, of which only the first choice's content is read:
//!
//! ```json
//! {"choices": [{"message": {"role": "assistant", "content": "hello"}}]}
//! ```
//!
//! The bearer token is read from an environment variable on every call and
//! is never stored, serialized or logged.

use std::time::Duration;

use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

/// Environment variable holding the bearer token unless a request names another.
pub const DEFAULT_TOKEN_ENV: &str = "PSAN_LLM_TOKEN";

pub const MAX_RETRIES: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("service unavailable (HTTP {status}) after {attempts} attempts")]
    Unavailable { status: u16, attempts: u32 },
    #[error("transport error after {attempts} attempts: {reason}")]
    Transport { reason: String, attempts: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn new(role: impl Into<String>, content: impl Into<String>) -> Self {
        Self { role: role.into(), content: content.into() }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new("system", content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new("user", content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new("assistant", content)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatRequest {
    pub endpoint: String,
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub timeout: Duration,
    /// Name of the environment variable holding the token.
    pub token_env: String,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: Message,
}

impl ChatRequest {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            messages: Vec::new(),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
            token_env: DEFAULT_TOKEN_ENV.to_owned(),
        }
    }

    pub fn with_message(mut self, message: Message) -> Self {
        self.messages.push(message);
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_token_env(mut self, var: impl Into<String>) -> Self {
        self.token_env = var.into();
        self
    }

    /// JSON body sent to the endpoint.
    pub fn body(&self) -> String {
        serde_json::to_string(&WireRequest {
            model: &self.model,
            messages: &self.messages,
            temperature: self.temperature,
        })
        .expect("request serializes")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Telemetry {
    pub attempts: u32,
    pub retries: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    pub telemetry: Telemetry,
}

enum Failure {
    Fatal(LlmError),
    Transient(LlmError),
}

#[derive(Clone, Debug)]
pub struct LlmClient {
    http: reqwest::blocking::Client,
    max_retries: u32,
    backoff: Duration,
}

impl Default for LlmClient {
    fn default() -> Self {
        Self::new()
    }
}

impl LlmClient {
    pub fn new() -> Self {
        Self { http: reqwest::blocking::Client::new(), max_retries: MAX_RETRIES, backoff: Duration::from_millis(500) }
    }

    /// Base delay before the first retry; doubled on each further retry.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_max_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    fn attempt(&self, request: &ChatRequest, token: &str, attempts: u32) -> Result<String, Failure> {
        let sent = self
            .http
            .post(&request.endpoint)
            .bearer_auth(token)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .timeout(request.timeout)
            .body(request.body())
            .send();
        let response = match sent {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Err(Failure::Transient(LlmError::Timeout { attempts })),
            Err(e) => {
                return Err(Failure::Transient(LlmError::Transport { reason: e.to_string(), attempts }));
            }
        };
        let status = response.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Err(Failure::Fatal(LlmError::Auth(format!("HTTP {}", status.as_u16()))));
        }
        if status == StatusCode::REQUEST_TIMEOUT || status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(Failure::Transient(LlmError::Unavailable { status: status.as_u16(), attempts }));
        }
        let text = match response.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Err(Failure::Transient(LlmError::Timeout { attempts })),
            Err(e) => return Err(Failure::Fatal(LlmError::Protocol(e.to_string()))),
        };
        if !status.is_success() {
            return Err(Failure::Fatal(LlmError::Protocol(format!("HTTP {}: {}", status.as_u16(), snippet(&text)))));
        }
        let parsed: WireResponse = serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(LlmError::Protocol(format!("{e}: {}", snippet(&text)))))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Failure::Fatal(LlmError::Protocol("response has no choices".into())))
    }

    /// Sends `request`, retrying timeouts, transport failures, 408, 429 and
    /// 5xx responses with exponential backoff.
    pub fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let token = std::env::var(&request.token_env)
            .map_err(|_| LlmError::Auth(format!("environment variable {} is not set", request.token_env)))?;
        let mut delay = self.backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(request, &token, attempts) {
                Ok(content) => {
                    return Ok(ChatResponse { content, telemetry: Telemetry { attempts, retries: attempts - 1 } });
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(e)) if attempts > self.max_retries => return Err(e),
                Err(Failure::Transient(e)) => {
                    log::warn!("chat attempt {attempts} failed: {e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}

/// Sends `request` with a default client and returns the reply text.
pub fn chat(request: &ChatRequest) -> Result<String, LlmError> {
    LlmClient::new().chat(request).map(|r| r.content)
}

/// Multi-turn exchange. The history holds only what was sent and received,
/// so callers keep it free of plaintext by sending sanitized prompts.
#[derive(Clone, Debug)]
pub struct Conversation {
    template: ChatRequest,
    history: Vec<Message>,
}

impl Conversation {
    /// `template` supplies endpoint, model and settings; its messages open
    /// the history.
    pub fn new(template: ChatRequest) -> Self {
        let history = template.messages.clone();
        Self { template, history }
    }

    pub fn history(&self) -> &[Message] {
        &self.history
    }

    pub fn send(&mut self, client: &LlmClient, user_text: &str) -> Result<String, LlmError> {
        let mut request = self.template.clone();
        request.messages = self.history.clone();
        request.messages.push(Message::user(user_text));
        let reply = client.chat(&request)?.content;
        self.history.push(Message::user(user_text));
        self.history.push(Message::assistant(reply.clone()));
        Ok(reply)
    }
}
