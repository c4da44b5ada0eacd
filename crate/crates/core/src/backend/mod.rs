//! Chat-completion backends behind one blocking interface.
//!
//! Three implementations share the [`ChatBackend`] trait: an OpenAI-compatible
//! HTTP client, a deterministic scripted stand-in, and a record/replay cache
//! wrapper. HTTP and scripted backends pace their calls through a
//! [`RateLimiter`] keyed by backend name and retry transient failures.

mod clock;
mod config;
mod http;
mod pacing;
mod replay;
mod scripted;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use clock::{Clock, MockClock, SystemClock};
pub use config::{BackendConfig, BackendKind};
pub use http::HttpBackend;
pub use pacing::{paced_call, AttemptError, PacedOutcome, RateLimiter, RetryPolicy};
pub use replay::{record_replay, CacheEntry, ReplayBackend};
pub use scripted::{Responder, ScriptedBackend, ScriptedBehavior};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend {backend}: credential variable {env} is not set")]
    AuthMissing { backend: String, env: String },
    #[error("backend {backend}: timed out after {attempts} attempt(s)")]
    Timeout { backend: String, attempts: u32 },
    #[error("backend {backend}: rate limited after {attempts} attempt(s)")]
    RateLimited { backend: String, attempts: u32 },
    #[error("backend {backend}: HTTP {status}: {body}")]
    Http {
        backend: String,
        status: u16,
        body: String,
    },
    #[error("backend {backend}: transport error: {msg}")]
    Transport { backend: String, msg: String },
    #[error("backend {backend}: unexpected response shape: {msg}")]
    Protocol { backend: String, msg: String },
    #[error("backend {0}: scripted response queue exhausted")]
    Exhausted(String),
    #[error("backend {backend}: no scripted response for fingerprint {fingerprint}")]
    UnknownFingerprint {
        backend: String,
        fingerprint: String,
    },
    #[error("backend {backend}: scripted failure: {msg}")]
    Scripted { backend: String, msg: String },
    #[error("backend {backend}: replay cache has no entry {fingerprint}")]
    CacheMiss {
        backend: String,
        fingerprint: String,
    },
    #[error("corrupt cache entry {file}: {msg}")]
    CacheCorrupt { file: String, msg: String },
    #[error("cache I/O on {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid backend config {name:?}: {msg}")]
    InvalidConfig { name: String, msg: String },
    #[error("duplicate backend name {0:?}")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub model: String,
    pub latency: Duration,
    pub attempt_count: u32,
    /// Clock reading when the first attempt started.
    pub started: Duration,
    pub finished: Duration,
}

pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;
    fn model(&self) -> &str;
    fn temperature(&self) -> f64;
    fn complete(&self, prompt: &str) -> Result<Completion, BackendError>;
}

/// Stable request fingerprint over (backend name, prompt, temperature).
pub fn fingerprint(backend: &str, prompt: &str, temperature: f64) -> String {
    // -0.0 and 0.0 are the same request
    let temperature = if temperature == 0.0 { 0.0 } else { temperature };
    let mut h = Sha256::new();
    for part in [backend.as_bytes(), prompt.as_bytes()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.update(temperature.to_bits().to_le_bytes());
    hex::encode(h.finalize())
}

/// Named backends available to pipelines.
#[derive(Clone, Default)]
pub struct BackendRegistry {
    backends: BTreeMap<String, Arc<dyn ChatBackend>>,
}

impl std::fmt::Debug for BackendRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.backends.keys()).finish()
    }
}

impl BackendRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, backend: Arc<dyn ChatBackend>) -> Result<(), BackendError> {
        let name = backend.name().to_string();
        if self.backends.contains_key(&name) {
            return Err(BackendError::Duplicate(name));
        }
        self.backends.insert(name, backend);
        Ok(())
    }

    pub fn with(mut self, backend: Arc<dyn ChatBackend>) -> Result<Self, BackendError> {
        self.register(backend)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn ChatBackend>> {
        self.backends.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.backends.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.backends.keys().map(String::as_str)
    }

    /// Builds every configured backend. With `replay_cache`, each one is
    /// wrapped in a record/replay cache rooted there.
    pub fn from_configs(
        configs: &[BackendConfig],
        clock: Arc<dyn Clock>,
        replay_cache: Option<&std::path::Path>,
    ) -> Result<Self, BackendError> {
        let mut reg = Self::new();
        for cfg in configs {
            let mut backend = cfg.build(clock.clone())?;
            if let Some(dir) = replay_cache {
                if !matches!(cfg.kind, BackendKind::Replay { .. }) {
                    backend = record_replay(backend, dir);
                }
            }
            reg.register(backend)?;
        }
        Ok(reg)
    }
}
