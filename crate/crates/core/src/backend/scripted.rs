use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::clock::{Clock, SystemClock};
use super::pacing::{paced_call, AttemptError, RateLimiter, RetryPolicy};
use super::{fingerprint, BackendError, ChatBackend, Completion};

/// Computes a response from the prompt. An `Err` becomes a scripted failure.
pub type Responder = Arc<dyn Fn(&str) -> Result<String, String> + Send + Sync>;

pub enum ScriptedBehavior {
    /// Responses served in order; errors once empty.
    Queue(Mutex<VecDeque<String>>),
    /// Responses keyed by request fingerprint.
    Map(HashMap<String, String>),
    /// Responses computed from the prompt text.
    Responder(Responder),
}

impl std::fmt::Debug for ScriptedBehavior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScriptedBehavior::Queue(q) => write!(f, "Queue({})", q.lock().unwrap().len()),
            ScriptedBehavior::Map(m) => write!(f, "Map({})", m.len()),
            ScriptedBehavior::Responder(_) => f.write_str("Responder"),
        }
    }
}

/// Deterministic stand-in LLM.
#[derive(Debug)]
pub struct ScriptedBackend {
    name: String,
    model: String,
    temperature: f64,
    behavior: ScriptedBehavior,
    limiter: RateLimiter,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new(name: impl Into<String>, behavior: ScriptedBehavior) -> Self {
        let name = name.into();
        Self {
            model: format!("scripted:{name}"),
            name,
            temperature: 0.7,
            behavior,
            limiter: RateLimiter::new(Duration::ZERO, Arc::new(SystemClock::new())),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn queue<I, S>(name: impl Into<String>, responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let q = responses.into_iter().map(Into::into).collect();
        Self::new(name, ScriptedBehavior::Queue(Mutex::new(q)))
    }

    pub fn map(name: impl Into<String>, responses: HashMap<String, String>) -> Self {
        Self::new(name, ScriptedBehavior::Map(responses))
    }

    pub fn responder<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&str) -> Result<String, String> + Send + Sync + 'static,
    {
        Self::new(name, ScriptedBehavior::Responder(Arc::new(f)))
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    pub fn with_pacing(mut self, min_interval: Duration, clock: Arc<dyn Clock>) -> Self {
        self.limiter = RateLimiter::new(min_interval, clock);
        self
    }

    /// Number of `complete` invocations so far, successful or not.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn respond(&self, prompt: &str) -> Result<String, BackendError> {
        match &self.behavior {
            ScriptedBehavior::Queue(q) => q
                .lock()
                .unwrap()
                .pop_front()
                .ok_or_else(|| BackendError::Exhausted(self.name.clone())),
            ScriptedBehavior::Map(m) => {
                let fp = fingerprint(&self.name, prompt, self.temperature);
                m.get(&fp)
                    .cloned()
                    .ok_or_else(|| BackendError::UnknownFingerprint {
                        backend: self.name.clone(),
                        fingerprint: fp,
                    })
            }
            ScriptedBehavior::Responder(f) => f(prompt).map_err(|msg| BackendError::Scripted {
                backend: self.name.clone(),
                msg,
            }),
        }
    }
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn complete(&self, prompt: &str) -> Result<Completion, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let policy = RetryPolicy {
            max_retries: 0,
            base: Duration::ZERO,
        };
        let out = paced_call(&self.name, &self.limiter, policy, || {
            self.respond(prompt).map_err(AttemptError::Fatal)
        })?;
        Ok(Completion {
            text: out.text,
            model: self.model.clone(),
            latency: out.finished.saturating_sub(out.started),
            attempt_count: out.attempts,
            started: out.started,
            finished: out.finished,
        })
    }
}
