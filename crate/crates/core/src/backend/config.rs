use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::http::HttpBackend;
use super::replay::ReplayBackend;
use super::scripted::ScriptedBackend;
use super::{BackendError, ChatBackend};

fn default_temperature() -> f64 {
    0.7
}
fn default_timeout() -> f64 {
    120.0
}
fn default_retries() -> u32 {
    3
}
fn default_interval() -> f64 {
    1.0
}

/// Declarative description of one backend, as read from a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub name: String,
    #[serde(flatten)]
    pub kind: BackendKind,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_interval")]
    pub min_interval_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    Http {
        endpoint: String,
        model: String,
        /// Name of the environment variable holding the API key.
        credential_env: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        extra_body: Option<serde_json::Map<String, serde_json::Value>>,
    },
    Scripted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        responses: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        responses_by_fingerprint: Option<BTreeMap<String, String>>,
    },
    Replay {
        cache_dir: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
    },
}

impl BackendConfig {
    pub fn http(
        name: impl Into<String>,
        endpoint: impl Into<String>,
        model: impl Into<String>,
        credential_env: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: BackendKind::Http {
                endpoint: endpoint.into(),
                model: model.into(),
                credential_env: credential_env.into(),
                extra_body: None,
            },
            temperature: default_temperature(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            min_interval_secs: default_interval(),
        }
    }

    pub fn min_interval(&self) -> Duration {
        Duration::from_secs_f64(self.min_interval_secs.max(0.0))
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |msg: &str| {
            Err(BackendError::InvalidConfig {
                name: self.name.clone(),
                msg: msg.to_string(),
            })
        };
        if self.name.trim().is_empty() {
            return bad("name must be non-empty");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be a finite value >= 0");
        }
        if !(self.min_interval_secs.is_finite() && self.min_interval_secs >= 0.0) {
            return bad("min_interval_secs must be >= 0");
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return bad("timeout_secs must be > 0");
        }
        match &self.kind {
            BackendKind::Http {
                endpoint,
                model,
                credential_env,
                ..
            } => {
                if endpoint.is_empty() || model.is_empty() || credential_env.is_empty() {
                    return bad("http backends need endpoint, model and credential_env");
                }
            }
            BackendKind::Scripted {
                responses,
                responses_by_fingerprint,
                ..
            } => {
                if responses.is_some() == responses_by_fingerprint.is_some() {
                    return bad("scripted backends need exactly one of responses or responses_by_fingerprint");
                }
            }
            BackendKind::Replay { .. } => {}
        }
        Ok(())
    }

    pub fn build(&self, clock: Arc<dyn Clock>) -> Result<Arc<dyn ChatBackend>, BackendError> {
        self.validate()?;
        let backend: Arc<dyn ChatBackend> = match &self.kind {
            BackendKind::Http {
                endpoint,
                model,
                credential_env,
                extra_body,
            } => {
                let b = HttpBackend::new(
                    &self.name,
                    endpoint,
                    model,
                    credential_env,
                    self.temperature,
                    Duration::from_secs_f64(self.timeout_secs),
                    self.max_retries,
                    self.min_interval(),
                    clock,
                )?;
                Arc::new(b.with_extra_body(extra_body.clone().unwrap_or_default()))
            }
            BackendKind::Scripted {
                model,
                responses,
                responses_by_fingerprint,
            } => {
                let b = match (responses, responses_by_fingerprint) {
                    (Some(q), _) => ScriptedBackend::queue(&self.name, q.clone()),
                    (None, Some(m)) => ScriptedBackend::map(
                        &self.name,
                        m.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
                    ),
                    (None, None) => unreachable!("validated"),
                };
                let b = b
                    .with_temperature(self.temperature)
                    .with_pacing(self.min_interval(), clock);
                Arc::new(match model {
                    Some(m) => b.with_model(m),
                    None => b,
                })
            }
            BackendKind::Replay { cache_dir, model } => Arc::new(ReplayBackend::replay_only(
                &self.name,
                model.clone().unwrap_or_else(|| self.name.clone()),
                self.temperature,
                cache_dir,
            )),
        };
        Ok(backend)
    }
}
