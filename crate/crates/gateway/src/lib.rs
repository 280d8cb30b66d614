//! Sends prompts to chat-completion providers.
//!
//! A [`Gateway`] wraps one provider. Every request goes through the response
//! cache first; misses are rate limited, retried with exponential backoff on
//! transient failures, and recorded in the cache once they succeed.

pub mod cache;
pub mod clock;
pub mod config;
pub mod transport;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use jargon_core::dispatch::{Completer, DispatchError};
use jargon_core::prompting::RenderedPrompt;
use rand::Rng;

pub use cache::{cache_key, ChatExchange, ResponseCache};
pub use clock::{Clock, ManualClock, RateLimiter, SystemClock};
pub use config::ProviderConfig;
pub use transport::{ChatMessage, ChatRequest, HttpTransport, Transport, TransportError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
    #[error("environment variable `{var}` with the API key for `{provider}` is not set")]
    AuthMissing { provider: String, var: String },
    #[error("`{provider}` still failing after {attempts} attempts: {last}")]
    ExhaustedRetries {
        provider: String,
        attempts: u32,
        status: Option<u16>,
        last: String,
    },
    #[error("`{provider}` rejected the request with HTTP {status}: {body}")]
    ProviderRejected {
        provider: String,
        status: u16,
        body: String,
    },
    #[error("`{provider}` returned an unusable response: {detail}")]
    BadResponse { provider: String, detail: String },
    #[error("refusing to send an empty prompt")]
    EmptyPrompt,
    #[error("response cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// Network attempts spent; 0 for a cache hit.
    pub attempts: u32,
    pub cached: bool,
}

enum KeySource {
    Env,
    Fixed(String),
}

pub struct Gateway {
    config: ProviderConfig,
    transport: Box<dyn Transport>,
    cache: Arc<ResponseCache>,
    clock: Arc<dyn Clock>,
    limiter: RateLimiter,
    key: KeySource,
    parallelism: usize,
    network_calls: AtomicU64,
}

impl Gateway {
    /// Gateway over HTTP with the real clock. The API key is read from the
    /// configured environment variable on the first cache miss.
    pub fn new(config: ProviderConfig, cache: Arc<ResponseCache>) -> Result<Self, GatewayError> {
        config.validate()?;
        let transport = HttpTransport::new(Duration::from_secs(config.timeout_secs));
        Ok(Self {
            limiter: RateLimiter::per_minute(config.requests_per_minute),
            config,
            transport: Box::new(transport),
            cache,
            clock: Arc::new(SystemClock::default()),
            key: KeySource::Env,
            parallelism: 1,
            network_calls: AtomicU64::new(0),
        })
    }

    pub fn with_transport(mut self, transport: impl Transport + 'static) -> Self {
        self.transport = Box::new(transport);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.key = KeySource::Fixed(key.into());
        self
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn cache(&self) -> &Arc<ResponseCache> {
        &self.cache
    }

    /// Requests actually sent over the transport, retries included.
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn api_key(&self) -> Result<String, GatewayError> {
        match &self.key {
            KeySource::Fixed(k) => Ok(k.clone()),
            KeySource::Env => std::env::var(&self.config.api_key_env)
                .ok()
                .filter(|v| !v.is_empty())
                .ok_or_else(|| GatewayError::AuthMissing {
                    provider: self.config.name.clone(),
                    var: self.config.api_key_env.clone(),
                }),
        }
    }

    /// Delay before retry number `retry` (1-based): the base doubles each
    /// time, plus up to 25% random jitter.
    pub fn backoff_delay(&self, retry: u32) -> Duration {
        let base = self.config.initial_backoff_ms.saturating_mul(1u64 << (retry - 1).min(20));
        let jitter = rand::rng().random_range(0..=base / 4);
        Duration::from_millis(base + jitter)
    }

    pub fn complete(&self, prompt: &str) -> Result<Completion, GatewayError> {
        if prompt.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let key = cache_key(&self.config, prompt);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(Completion {
                text: hit.response,
                attempts: 0,
                cached: true,
            });
        }
        let api_key = self.api_key()?;
        let request = ChatRequest {
            model: &self.config.model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let endpoint = self.config.endpoint();
        let provider = &self.config.name;
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.limiter.acquire(self.clock.as_ref());
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            match self.transport.send(&endpoint, &api_key, &request) {
                Ok(text) => {
                    self.cache.insert(ChatExchange {
                        cache_key: key,
                        provider: provider.clone(),
                        model: self.config.model.clone(),
                        prompt: prompt.to_string(),
                        response: text.clone(),
                        timestamp: chrono::Utc::now().to_rfc3339(),
                        attempts: attempt,
                    })?;
                    return Ok(Completion {
                        text,
                        attempts: attempt,
                        cached: false,
                    });
                }
                Err(e) if e.is_transient() => {
                    if attempt >= self.config.max_attempts {
                        return Err(GatewayError::ExhaustedRetries {
                            provider: provider.clone(),
                            attempts: attempt,
                            status: e.status(),
                            last: e.to_string(),
                        });
                    }
                    tracing::debug!(provider = %provider, attempt, error = %e, "retrying");
                    self.clock.sleep(self.backoff_delay(attempt));
                }
                Err(TransportError::Status { code, body }) => {
                    return Err(GatewayError::ProviderRejected {
                        provider: provider.clone(),
                        status: code,
                        body,
                    })
                }
                Err(e) => {
                    return Err(GatewayError::BadResponse {
                        provider: provider.clone(),
                        detail: e.to_string(),
                    })
                }
            }
        }
    }

    /// Completes every prompt with up to `parallelism` requests in flight.
    /// Results keep the input order; identical prompts are sent once.
    pub fn run_batch<S: AsRef<str> + Sync>(&self, prompts: &[S]) -> Vec<Result<Completion, GatewayError>> {
        let mut first_index: HashMap<&str, usize> = HashMap::new();
        let mut unique: Vec<&str> = Vec::new();
        let slot_of: Vec<usize> = prompts
            .iter()
            .map(|p| {
                *first_index.entry(p.as_ref()).or_insert_with(|| {
                    unique.push(p.as_ref());
                    unique.len() - 1
                })
            })
            .collect();

        let results: Mutex<Vec<Option<Result<Completion, GatewayError>>>> =
            Mutex::new(vec![None; unique.len()]);
        let next = AtomicUsize::new(0);
        let workers = self.parallelism.min(unique.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= unique.len() {
                        break;
                    }
                    let outcome = self.complete(unique[i]);
                    results.lock().expect("batch results lock")[i] = Some(outcome);
                });
            }
        });
        let results = results.into_inner().expect("batch results lock");
        slot_of
            .into_iter()
            .map(|s| results[s].clone().expect("every slot is filled"))
            .collect()
    }
}

impl Completer for Gateway {
    fn complete_batch(&self, prompts: &[RenderedPrompt]) -> Vec<Result<String, DispatchError>> {
        let texts: Vec<&str> = prompts.iter().map(|p| p.full_text.as_str()).collect();
        self.run_batch(&texts)
            .into_iter()
            .map(|r| r.map(|c| c.text).map_err(|e| DispatchError::new(e.to_string())))
            .collect()
    }
}
