//! Wire layer: one HTTP round trip to a chat-completions endpoint.

use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatMessage<'a> {
    pub role: &'a str,
    pub content: &'a str,
}

/// Request body for an OpenAI-style `/chat/completions` endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub messages: Vec<ChatMessage<'a>>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("network error: {0}")]
    Network(String),
    #[error("undecodable response: {0}")]
    Decode(String),
}

impl TransportError {
    /// 429, 5xx, timeouts and connection failures are worth retrying.
    pub fn is_transient(&self) -> bool {
        match self {
            TransportError::Status { code, .. } => *code == 429 || *code >= 500,
            TransportError::Timeout | TransportError::Network(_) => true,
            TransportError::Decode(_) => false,
        }
    }

    pub fn status(&self) -> Option<u16> {
        match self {
            TransportError::Status { code, .. } => Some(*code),
            _ => None,
        }
    }
}

pub trait Transport: Send + Sync {
    fn send(&self, endpoint: &str, api_key: &str, request: &ChatRequest<'_>) -> Result<String, TransportError>;
}

/// Extracts the first choice's message text from a response body.
pub fn decode_chat_response(body: &str) -> Result<String, TransportError> {
    let parsed: ChatResponse =
        serde_json::from_str(body).map_err(|e| TransportError::Decode(e.to_string()))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| TransportError::Decode("no choices[0].message.content".into()))
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for HttpTransport {
    fn send(&self, endpoint: &str, api_key: &str, request: &ChatRequest<'_>) -> Result<String, TransportError> {
        let result = self
            .agent
            .post(endpoint)
            .header("Authorization", &format!("Bearer {api_key}"))
            .send_json(request);
        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(TransportError::Timeout),
            Err(e) => return Err(TransportError::Network(e.to_string())),
        };
        let code = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => TransportError::Timeout,
                other => TransportError::Network(other.to_string()),
            })?;
        if !(200..300).contains(&code) {
            return Err(TransportError::Status { code, body });
        }
        decode_chat_response(&body)
    }
}
