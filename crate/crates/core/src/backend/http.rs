use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Map, Value};

use super::clock::Clock;
use super::pacing::{paced_call, AttemptError, RateLimiter, RetryPolicy};
use super::{BackendError, ChatBackend, Completion};

/// OpenAI-compatible chat-completions client. Each prompt is sent as a single
/// user message and the first choice's content is returned.
#[derive(Debug)]
pub struct HttpBackend {
    name: String,
    endpoint: String,
    model: String,
    credential_env: String,
    temperature: f64,
    extra_body: Map<String, Value>,
    max_retries: u32,
    limiter: RateLimiter,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        endpoint: impl Into<String>,
        model: impl Into<String>,
        credential_env: impl Into<String>,
        temperature: f64,
        timeout: Duration,
        max_retries: u32,
        min_interval: Duration,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, BackendError> {
        let name = name.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::InvalidConfig {
                name: name.clone(),
                msg: e.to_string(),
            })?;
        Ok(Self {
            name,
            endpoint: endpoint.into(),
            model: model.into(),
            credential_env: credential_env.into(),
            temperature,
            extra_body: Map::new(),
            max_retries,
            limiter: RateLimiter::new(min_interval, clock),
            client,
        })
    }

    /// Extra top-level request fields, merged over the defaults.
    pub fn with_extra_body(mut self, extra: Map<String, Value>) -> Self {
        self.extra_body = extra;
        self
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        });
        if let Value::Object(map) = &mut body {
            for (k, v) in &self.extra_body {
                map.insert(k.clone(), v.clone());
            }
        }
        body
    }

    fn attempt(&self, key: &str, body: &Value) -> Result<String, AttemptError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(key)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    AttemptError::Timeout
                } else {
                    AttemptError::Transport(e.to_string())
                }
            })?;
        let status = resp.status();
        if status.as_u16() == 429 {
            return Err(AttemptError::RateLimited);
        }
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                AttemptError::Timeout
            } else {
                AttemptError::Transport(e.to_string())
            }
        })?;
        if status.is_server_error() {
            return Err(AttemptError::Server {
                status: status.as_u16(),
                body: text,
            });
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(BackendError::Http {
                backend: self.name.clone(),
                status: status.as_u16(),
                body: text,
            }));
        }
        extract_content(&text).map_err(|msg| {
            AttemptError::Fatal(BackendError::Protocol {
                backend: self.name.clone(),
                msg,
            })
        })
    }
}

fn extract_content(body: &str) -> Result<String, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| "missing choices[0].message.content".to_string())
}

impl ChatBackend for HttpBackend {
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
        let key = std::env::var(&self.credential_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::AuthMissing {
                backend: self.name.clone(),
                env: self.credential_env.clone(),
            })?;
        let body = self.request_body(prompt);
        let policy = RetryPolicy {
            max_retries: self.max_retries,
            base: self.limiter.min_interval(),
        };
        let out = paced_call(&self.name, &self.limiter, policy, || {
            self.attempt(&key, &body)
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
