//! Per-backend start-time spacing and retry with exponential backoff.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::clock::Clock;
use super::BackendError;

const BACKOFF_CAP: Duration = Duration::from_secs(30);

/// Hands out call start times spaced at least `min_interval` apart.
///
/// Slots are reserved under a lock and then slept towards outside it, so any
/// number of threads may wait concurrently while start times stay ordered.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    next_free: Mutex<Option<Duration>>,
    clock: Arc<dyn Clock>,
}

impl RateLimiter {
    pub fn new(min_interval: Duration, clock: Arc<dyn Clock>) -> Self {
        Self {
            min_interval,
            next_free: Mutex::new(None),
            clock,
        }
    }

    pub fn min_interval(&self) -> Duration {
        self.min_interval
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Blocks until this caller's slot and returns the slot's start time.
    pub fn acquire(&self) -> Duration {
        let slot = {
            let mut next = self.next_free.lock().unwrap();
            let now = self.clock.now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.min_interval);
            slot
        };
        self.clock.sleep_until(slot);
        slot
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base: Duration,
}

impl RetryPolicy {
    /// Delay after `attempts` failed attempts: base * 2^attempts, capped at 30 s.
    pub fn backoff(&self, attempts: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempts.min(16));
        self.base.saturating_mul(factor).min(BACKOFF_CAP)
    }
}

/// Failure of a single attempt.
#[derive(Debug)]
pub enum AttemptError {
    RateLimited,
    Server { status: u16, body: String },
    Transport(String),
    Timeout,
    Fatal(BackendError),
}

impl AttemptError {
    fn into_final(self, backend: &str, attempts: u32) -> BackendError {
        let backend = backend.to_string();
        match self {
            AttemptError::RateLimited => BackendError::RateLimited { backend, attempts },
            AttemptError::Timeout => BackendError::Timeout { backend, attempts },
            AttemptError::Server { status, body } => BackendError::Http {
                backend,
                status,
                body,
            },
            AttemptError::Transport(msg) => BackendError::Transport { backend, msg },
            AttemptError::Fatal(e) => e,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PacedOutcome {
    pub text: String,
    pub attempts: u32,
    pub started: Duration,
    pub finished: Duration,
}

/// Runs `attempt` under the limiter, retrying transient failures.
pub fn paced_call<F>(
    backend: &str,
    limiter: &RateLimiter,
    policy: RetryPolicy,
    mut attempt: F,
) -> Result<PacedOutcome, BackendError>
where
    F: FnMut() -> Result<String, AttemptError>,
{
    let clock = limiter.clock().clone();
    let mut first_start = None;
    let mut attempts = 0u32;
    loop {
        let started = limiter.acquire();
        first_start.get_or_insert(started);
        attempts += 1;
        match attempt() {
            Ok(text) => {
                return Ok(PacedOutcome {
                    text,
                    attempts,
                    started: first_start.unwrap_or(started),
                    finished: clock.now(),
                })
            }
            Err(AttemptError::Fatal(e)) => return Err(e),
            Err(e) if attempts > policy.max_retries => {
                return Err(e.into_final(backend, attempts));
            }
            Err(e) => {
                log::warn!("{backend}: attempt {attempts} failed ({e:?}), backing off");
                let wait = policy.backoff(attempts);
                clock.sleep_until(clock.now() + wait);
            }
        }
    }
}
