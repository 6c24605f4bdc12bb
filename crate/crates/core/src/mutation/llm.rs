//! Completion-style LLM transport.
//!
//! Wire format (POST `{ELM_LLM_URL}/completions`, bearer `ELM_LLM_KEY`):
//!
//! ```text
//! request:  {"model": M, "prompt": P, "temperature": T, "max_tokens": N, "n": K}
//! response: {"choices": [{"index": i, "text": "..."}, ...],
//!            "usage": {"prompt_tokens": a, "completion_tokens": b}}
//! ```

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlmResponse {
    pub completions: Vec<String>,
    pub usage: Usage,
}

impl LlmResponse {
    pub fn texts<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self {
            completions: texts.into_iter().map(Into::into).collect(),
            usage: Usage::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("network: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("missing environment variable {0}")]
    MissingEnv(&'static str),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: Box<TransportError> },
}

impl TransportError {
    fn retryable(&self) -> bool {
        match self {
            TransportError::Http { status, .. } => *status == 429 || *status >= 500,
            TransportError::Network(_) => true,
            _ => false,
        }
    }
}

pub trait LlmTransport: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, TransportError>;
}

pub const ENV_URL: &str = "ELM_LLM_URL";
pub const ENV_MODEL: &str = "ELM_LLM_MODEL";
pub const ENV_KEY: &str = "ELM_LLM_KEY";

pub struct HttpTransport {
    url: String,
    model: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, model: impl Into<String>, key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            key,
            agent,
        }
    }

    /// Reads the endpoint, model, and optional key from the environment.
    pub fn from_env(timeout: Duration) -> Result<Self, TransportError> {
        let url = std::env::var(ENV_URL).map_err(|_| TransportError::MissingEnv(ENV_URL))?;
        let model = std::env::var(ENV_MODEL).map_err(|_| TransportError::MissingEnv(ENV_MODEL))?;
        let key = std::env::var(ENV_KEY).ok();
        Ok(Self::new(url, model, key, timeout))
    }
}

fn parse_completion_body(body: &str) -> Result<LlmResponse, TransportError> {
    let v: Value = serde_json::from_str(body).map_err(|e| TransportError::Malformed(e.to_string()))?;
    let choices = v["choices"]
        .as_array()
        .ok_or_else(|| TransportError::Malformed("no choices array".into()))?;
    let mut indexed = Vec::with_capacity(choices.len());
    for (pos, c) in choices.iter().enumerate() {
        let text = c["text"]
            .as_str()
            .ok_or_else(|| TransportError::Malformed(format!("choice {pos} has no text")))?;
        let index = c["index"].as_u64().unwrap_or(pos as u64);
        indexed.push((index, text.to_string()));
    }
    indexed.sort_by_key(|(i, _)| *i);
    Ok(LlmResponse {
        completions: indexed.into_iter().map(|(_, t)| t).collect(),
        usage: Usage {
            prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
        },
    })
}

impl LlmTransport for HttpTransport {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, TransportError> {
        let body = json!({
            "model": self.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "n": request.n,
        })
        .to_string();
        let mut req = self
            .agent
            .post(format!("{}/completions", self.url))
            .header("Content-Type", "application/json");
        if let Some(key) = &self.key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let resp = req.send(body).map_err(|e| TransportError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .into_body()
            .read_to_string()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        if status != 200 {
            return Err(TransportError::Http { status, body: text });
        }
        parse_completion_body(&text)
    }
}

type Responder = dyn Fn(&LlmRequest) -> Result<LlmResponse, TransportError> + Send + Sync;

enum Script {
    Queue(Mutex<VecDeque<Result<LlmResponse, TransportError>>>),
    Func(Box<Responder>),
}

/// Test transport: either a queue of canned replies consumed in call order,
/// or a function of the request. Every request is recorded.
pub struct MockTransport {
    script: Script,
    calls: Mutex<Vec<LlmRequest>>,
}

impl MockTransport {
    pub fn queue(replies: impl IntoIterator<Item = Result<LlmResponse, TransportError>>) -> Self {
        Self {
            script: Script::Queue(Mutex::new(replies.into_iter().collect())),
            calls: Mutex::new(Vec::new()),
        }
    }

    /// A function-backed mock is safe under parallel callers: its reply
    /// depends only on the request.
    pub fn from_fn(f: impl Fn(&LlmRequest) -> Result<LlmResponse, TransportError> + Send + Sync + 'static) -> Self {
        Self {
            script: Script::Func(Box::new(f)),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<LlmRequest> {
        self.calls.lock().unwrap().clone()
    }
}

impl LlmTransport for MockTransport {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, TransportError> {
        self.calls.lock().unwrap().push(request.clone());
        match &self.script {
            Script::Queue(q) => q
                .lock()
                .unwrap()
                .pop_front()
                .unwrap_or_else(|| Err(TransportError::Network("mock script exhausted".into()))),
            Script::Func(f) => f(request),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            temperature: 0.8,
            max_tokens: 1024,
        }
    }
}

/// Total attempts per request and the first backoff delay; each retry
/// doubles the delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    pub fn no_wait(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay: Duration::ZERO,
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Default)]
pub struct ClientStats {
    pub requests: AtomicU64,
    pub retries: AtomicU64,
    pub failures: AtomicU64,
    pub prompt_tokens: AtomicU64,
    pub completion_tokens: AtomicU64,
}

/// Retrying, rate-limited front end over a transport.
pub struct LlmClient {
    transport: Arc<dyn LlmTransport>,
    pub sampling: SamplingParams,
    pub retry: RetryPolicy,
    limiter: Semaphore,
    pub stats: ClientStats,
}

impl LlmClient {
    pub fn new(transport: Arc<dyn LlmTransport>, sampling: SamplingParams, retry: RetryPolicy, max_in_flight: usize) -> Self {
        Self {
            transport,
            sampling,
            retry,
            limiter: Semaphore::new(max_in_flight),
            stats: ClientStats::default(),
        }
    }

    /// Mock-friendly constructor: default sampling, no backoff delay.
    pub fn with_transport(transport: Arc<dyn LlmTransport>) -> Self {
        Self::new(transport, SamplingParams::default(), RetryPolicy::no_wait(3), 8)
    }

    pub fn complete(&self, prompt: &str, n: u32) -> Result<LlmResponse, TransportError> {
        let request = LlmRequest {
            prompt: prompt.to_string(),
            temperature: self.sampling.temperature,
            max_tokens: self.sampling.max_tokens,
            n,
        };
        let attempts = self.retry.attempts.max(1);
        let mut delay = self.retry.base_delay;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                self.stats.retries.fetch_add(1, Ordering::Relaxed);
                std::thread::sleep(delay);
                delay *= 2;
            }
            self.stats.requests.fetch_add(1, Ordering::Relaxed);
            let result = {
                let _permit = self.limiter.acquire();
                self.transport.complete(&request)
            };
            match result {
                Ok(resp) => {
                    self.stats.prompt_tokens.fetch_add(resp.usage.prompt_tokens, Ordering::Relaxed);
                    self.stats
                        .completion_tokens
                        .fetch_add(resp.usage.completion_tokens, Ordering::Relaxed);
                    return Ok(resp);
                }
                Err(e) if e.retryable() => last = Some(e),
                Err(e) => {
                    self.stats.failures.fetch_add(1, Ordering::Relaxed);
                    return Err(e);
                }
            }
        }
        self.stats.failures.fetch_add(1, Ordering::Relaxed);
        Err(TransportError::Exhausted {
            attempts,
            last: Box::new(last.expect("at least one attempt")),
        })
    }
}
