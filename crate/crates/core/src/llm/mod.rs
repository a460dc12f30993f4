//! Chat-completion gateway with replay fixtures, an in-memory cache and
//! bounded-parallel battery execution.
//!
//! In `live` mode prompts go to an OpenAI-compatible endpoint. `replay`
//! answers only from fixture files and never touches the network. `record`
//! calls the endpoint and writes each answer as a new fixture. The cache is
//! consulted first in every mode.

mod fixtures;
mod transport;

pub use fixtures::{Fixture, FixtureStore};
pub use transport::{
    parse_chat_response, ChatRequest, ChatResponse, CountingTransport, HttpTransport, Transport,
    TransportError, Usage,
};

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::FieldHasher;
use crate::prompts::PromptSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Live,
    Replay,
    Record,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Mode::Live),
            "replay" => Ok(Mode::Replay),
            "record" => Ok(Mode::Record),
            other => Err(format!("unknown LLM mode '{other}' (live, replay, record)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff_ms: 1000,
            multiplier: 2,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = u64::from(self.multiplier).saturating_pow(attempt.saturating_sub(1));
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor))
    }
}

/// Gateway settings. The credential itself is never stored here, only the
/// name of the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub mode: Mode,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_parallel: usize,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    pub api_key_env: String,
}

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4";
pub const DEFAULT_KEY_ENV: &str = "OPENAI_API_KEY";

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            mode: Mode::Replay,
            endpoint: DEFAULT_ENDPOINT.into(),
            model: DEFAULT_MODEL.into(),
            temperature: 0.0,
            max_parallel: 4,
            timeout_secs: 60,
            retry: RetryPolicy::default(),
            fixtures: None,
            api_key_env: DEFAULT_KEY_ENV.into(),
        }
    }
}

impl LlmConfig {
    pub fn replay(fixtures: impl Into<PathBuf>) -> Self {
        LlmConfig {
            fixtures: Some(fixtures.into()),
            ..LlmConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_parallel == 0 {
            return Err(LlmError::Config("max_parallel must be at least 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(LlmError::Config("retry.max_attempts must be at least 1".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(LlmError::Config("temperature must be non-negative".into()));
        }
        if matches!(self.mode, Mode::Replay | Mode::Record) && self.fixtures.is_none() {
            return Err(LlmError::Config(format!(
                "{} mode needs a fixture directory",
                if self.mode == Mode::Replay { "replay" } else { "record" }
            )));
        }
        Ok(())
    }

    /// Exchange key: hash of model, temperature and full prompt text.
    pub fn exchange_key(&self, prompt: &str) -> String {
        exchange_key(&self.model, self.temperature, prompt)
    }
}

pub fn exchange_key(model: &str, temperature: f64, prompt: &str) -> String {
    let mut h = FieldHasher::new();
    h.field(model).field(format!("{temperature:?}")).field(prompt);
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub key: String,
    pub prompt: String,
    pub response: String,
    pub model: String,
    pub temperature: f64,
    pub timestamp: String,
    #[serde(default)]
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("invalid LLM configuration: {0}")]
    Config(String),
    #[error("environment variable {0} is not set; live and record modes need an API key")]
    MissingCredential(String),
    #[error("no fixture for prompt key {0}")]
    MissingFixture(String),
    #[error("fixture {key} was recorded for a different prompt")]
    FixtureMismatch { key: String },
    #[error("fixture {0} already exists with different content; record into a new directory")]
    FixtureExists(String),
    #[error("fixture store: {0}")]
    Fixture(String),
    #[error("LLM request failed after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: TransportError,
    },
    #[error("all {} prompts failed; first error: {}", .0.len(), .0.first().map(String::as_str).unwrap_or(""))]
    AllFailed(Vec<String>),
}

/// Shareable across threads: the cache takes a read lock for lookups and a
/// write lock only to insert.
pub struct Gateway {
    cfg: LlmConfig,
    transport: Option<Arc<dyn Transport>>,
    fixtures: Option<FixtureStore>,
    cache: RwLock<HashMap<String, Exchange>>,
}

impl Gateway {
    /// Builds a gateway, reading the credential from the environment when
    /// the mode needs the network.
    pub fn new(cfg: LlmConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        let transport: Option<Arc<dyn Transport>> = match cfg.mode {
            Mode::Replay => None,
            Mode::Live | Mode::Record => {
                let key = std::env::var(&cfg.api_key_env)
                    .ok()
                    .filter(|k| !k.trim().is_empty())
                    .ok_or_else(|| LlmError::MissingCredential(cfg.api_key_env.clone()))?;
                let t = HttpTransport::new(key).map_err(|source| LlmError::Transport {
                    attempts: 0,
                    source,
                })?;
                Some(Arc::new(t))
            }
        };
        Ok(Self::assemble(cfg, transport))
    }

    /// Gateway over a caller-supplied transport (tests, alternative
    /// clients). Replay mode ignores the transport.
    pub fn with_transport(cfg: LlmConfig, transport: Arc<dyn Transport>) -> Result<Self, LlmError> {
        cfg.validate()?;
        Ok(Self::assemble(cfg, Some(transport)))
    }

    fn assemble(cfg: LlmConfig, transport: Option<Arc<dyn Transport>>) -> Self {
        let fixtures = cfg.fixtures.clone().map(FixtureStore::new);
        Gateway {
            cfg,
            transport,
            fixtures,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.cfg
    }

    pub fn seed_cache(&self, exchanges: impl IntoIterator<Item = Exchange>) {
        let mut cache = self.cache.write().unwrap();
        for x in exchanges {
            cache.entry(x.key.clone()).or_insert(x);
        }
    }

    pub fn cached(&self, key: &str) -> Option<Exchange> {
        self.cache.read().unwrap().get(key).cloned()
    }

    pub fn complete(&self, spec: &PromptSpec) -> Result<Exchange, LlmError> {
        let key = self.cfg.exchange_key(&spec.rendered);
        if let Some(x) = self.cached(&key) {
            return Ok(x);
        }
        let exchange = match self.cfg.mode {
            Mode::Replay => self.from_fixture(&key, spec)?,
            Mode::Live => self.from_network(&key, spec)?,
            Mode::Record => {
                let x = self.from_network(&key, spec)?;
                let store = self.fixtures.as_ref().expect("validated: record has fixtures");
                store.write(
                    &key,
                    &Fixture {
                        prompt: x.prompt.clone(),
                        response: x.response.clone(),
                        model: x.model.clone(),
                        temperature: x.temperature,
                    },
                )?;
                x
            }
        };
        let mut cache = self.cache.write().unwrap();
        Ok(cache.entry(key).or_insert(exchange).clone())
    }

    fn from_fixture(&self, key: &str, spec: &PromptSpec) -> Result<Exchange, LlmError> {
        let store = self.fixtures.as_ref().expect("validated: replay has fixtures");
        let f = store
            .load(key)?
            .ok_or_else(|| LlmError::MissingFixture(key.to_owned()))?;
        if f.prompt != spec.rendered {
            return Err(LlmError::FixtureMismatch { key: key.to_owned() });
        }
        Ok(Exchange {
            key: key.to_owned(),
            prompt: f.prompt,
            response: f.response,
            model: f.model,
            temperature: f.temperature,
            timestamp: now(),
            usage: Usage::default(),
        })
    }

    fn from_network(&self, key: &str, spec: &PromptSpec) -> Result<Exchange, LlmError> {
        let transport = self
            .transport
            .as_ref()
            .ok_or_else(|| LlmError::Config("no transport configured".into()))?;
        let req = ChatRequest {
            endpoint: self.cfg.endpoint.clone(),
            model: self.cfg.model.clone(),
            temperature: self.cfg.temperature,
            system: spec.persona.clone(),
            user: spec.body.clone(),
            timeout: Duration::from_secs(self.cfg.timeout_secs),
        };
        let mut attempt = 0;
        loop {
            attempt += 1;
            match transport.chat(&req) {
                Ok(resp) => {
                    return Ok(Exchange {
                        key: key.to_owned(),
                        prompt: spec.rendered.clone(),
                        response: resp.content,
                        model: self.cfg.model.clone(),
                        temperature: self.cfg.temperature,
                        timestamp: now(),
                        usage: resp.usage,
                    })
                }
                Err(e) if e.is_retryable() && attempt < self.cfg.retry.max_attempts => {
                    std::thread::sleep(self.cfg.retry.backoff(attempt));
                }
                Err(source) => {
                    return Err(LlmError::Transport {
                        attempts: attempt,
                        source,
                    })
                }
            }
        }
    }

    /// Completes every spec with at most `max_parallel` requests in flight.
    /// Results come back in input order; individual failures are kept in
    /// place, and only a battery where every spec fails is an error.
    pub fn run_battery(&self, specs: &[PromptSpec]) -> Result<Vec<Result<Exchange, LlmError>>, LlmError> {
        let slots: Vec<Mutex<Option<Result<Exchange, LlmError>>>> =
            specs.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.cfg.max_parallel.min(specs.len()).max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= specs.len() {
                        break;
                    }
                    let r = self.complete(&specs[i]);
                    *slots[i].lock().unwrap() = Some(r);
                });
            }
        });
        let results: Vec<Result<Exchange, LlmError>> = slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("every slot is filled"))
            .collect();
        if !results.is_empty() && results.iter().all(Result::is_err) {
            return Err(LlmError::AllFailed(
                results
                    .iter()
                    .filter_map(|r| r.as_ref().err().map(ToString::to_string))
                    .collect(),
            ));
        }
        Ok(results)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
