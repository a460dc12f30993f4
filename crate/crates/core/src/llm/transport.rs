use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

/// Token counters reported by the endpoint, when it reports them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub system: String,
    pub user: String,
    pub timeout: Duration,
}

impl ChatRequest {
    /// OpenAI-compatible request body.
    pub fn body(&self) -> serde_json::Value {
        json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": self.system},
                {"role": "user", "content": self.user},
            ],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("network error: {0}")]
    Network(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
}

impl TransportError {
    /// Transport failures, rate limiting and server errors are retried.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Network(_) => true,
            TransportError::Http { status, .. } => *status == 429 || *status >= 500,
            TransportError::Decode(_) => false,
        }
    }
}

pub trait Transport: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, TransportError>;
}

/// Extracts `choices[0].message.content` and usage counters.
pub fn parse_chat_response(body: &str) -> Result<ChatResponse, TransportError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| TransportError::Decode(e.to_string()))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| TransportError::Decode("missing choices[0].message.content".into()))?
        .to_owned();
    let usage = v
        .get("usage")
        .and_then(|u| serde_json::from_value(u.clone()).ok())
        .unwrap_or_default();
    Ok(ChatResponse { content, usage })
}

/// Blocking HTTPS transport with a bearer credential.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    api_key: String,
}

impl HttpTransport {
    pub fn new(api_key: String) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(HttpTransport { client, api_key })
    }
}

impl Transport for HttpTransport {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let resp = self
            .client
            .post(&req.endpoint)
            .bearer_auth(&self.api_key)
            .timeout(req.timeout)
            .json(&req.body())
            .send()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError::Http {
                status: status.as_u16(),
                body: text,
            });
        }
        parse_chat_response(&text)
    }
}

/// Scripted transport for tests: answers from a closure and counts calls.
pub struct CountingTransport {
    calls: AtomicUsize,
    answer: Box<dyn Fn(&ChatRequest, usize) -> Result<ChatResponse, TransportError> + Send + Sync>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl CountingTransport {
    pub fn new(
        answer: impl Fn(&ChatRequest, usize) -> Result<ChatResponse, TransportError> + Send + Sync + 'static,
    ) -> Self {
        CountingTransport {
            calls: AtomicUsize::new(0),
            answer: Box::new(answer),
            seen: Mutex::new(Vec::new()),
        }
    }

    /// Always answers `text`.
    pub fn constant(text: &str) -> Self {
        let text = text.to_owned();
        Self::new(move |_, _| {
            Ok(ChatResponse {
                content: text.clone(),
                usage: Usage::default(),
            })
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl Transport for CountingTransport {
    fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().unwrap().push(req.clone());
        (self.answer)(req, n)
    }
}
