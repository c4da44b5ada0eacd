use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::backend::{BackendConfig, BackendKind};
use crate::pipelines::{DebateConfig, TemplateLibrary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineKind {
    Baseline,
    Regular,
    Hierarchical,
}

impl PipelineKind {
    pub fn label(self) -> &'static str {
        match self {
            PipelineKind::Baseline => "Baseline",
            PipelineKind::Regular => "Regular",
            PipelineKind::Hierarchical => "Hierarchical",
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PipelineKind::Baseline => "baseline",
            PipelineKind::Regular => "regular",
            PipelineKind::Hierarchical => "hierarchical",
        })
    }
}

impl FromStr for PipelineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(PipelineKind::Baseline),
            "regular" => Ok(PipelineKind::Regular),
            "hierarchical" => Ok(PipelineKind::Hierarchical),
            other => Err(format!(
                "unknown pipeline {other:?} (expected baseline, regular or hierarchical)"
            )),
        }
    }
}

/// Backends, debate settings and an optional templates file for one run.
///
/// ```toml
/// templates = "prompts.txt"        # optional, defaults to the bundled set
///
/// [debate]
/// debaters = ["gpt-4o", "gpt-4o-mini"]
/// regular_rounds = 1
///
/// [[backends]]
/// name = "gpt-4o"
/// kind = "http"
/// endpoint = "https://api.openai.com/v1/chat/completions"
/// model = "gpt-4o"
/// credential_env = "OPENAI_API_KEY"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
    pub debate: DebateConfig,
    pub backends: Vec<BackendConfig>,
}

const SECRET_HINTS: &[&str] = &["key", "token", "secret", "password", "authorization"];

impl ExperimentConfig {
    pub fn from_toml_str(src: &str) -> Result<Self, RunError> {
        let cfg: Self = toml::from_str(src).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let src = std::fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&src)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(t) = &mut cfg.templates {
            if t.is_relative() {
                *t = base.join(&*t);
            }
        }
        for b in &mut cfg.backends {
            if let BackendKind::Replay { cache_dir, .. } = &mut b.kind {
                if cache_dir.is_relative() {
                    *cache_dir = base.join(&*cache_dir);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.debate.validate()?;
        for b in &self.backends {
            b.validate()?;
        }
        for d in &self.debate.debaters {
            if !self.backends.iter().any(|b| &b.name == d) {
                return Err(RunError::BackendUnregistered(d.clone()));
            }
        }
        Ok(())
    }

    pub fn template_library(&self) -> Result<TemplateLibrary, RunError> {
        Ok(match &self.templates {
            Some(p) => TemplateLibrary::load(p)?,
            None => TemplateLibrary::default(),
        })
    }

    /// Copy safe to persist: request-body fields that look like credentials
    /// are blanked. API keys themselves only ever live in the environment.
    pub fn redacted(&self) -> Self {
        let mut cfg = self.clone();
        for b in &mut cfg.backends {
            if let BackendKind::Http {
                extra_body: Some(extra),
                ..
            } = &mut b.kind
            {
                for (k, v) in extra.iter_mut() {
                    let lower = k.to_ascii_lowercase();
                    if SECRET_HINTS.iter().any(|h| lower.contains(h)) {
                        *v = serde_json::Value::String("[REDACTED]".into());
                    }
                }
            }
        }
        cfg
    }

    /// HTTP backends whose credential variable is unset or empty, as
    /// `(backend, variable)` pairs.
    pub fn missing_credentials(&self) -> Vec<(String, String)> {
        self.backends
            .iter()
            .filter_map(|b| match &b.kind {
                BackendKind::Http { credential_env, .. }
                    if std::env::var(credential_env).map_or(true, |v| v.is_empty()) =>
                {
                    Some((b.name.clone(), credential_env.clone()))
                }
                _ => None,
            })
            .collect()
    }

    /// Label for reports: the baseline model, or debaters joined with `+`.
    pub fn models_label(&self, pipeline: PipelineKind) -> String {
        match pipeline {
            PipelineKind::Baseline => self.debate.debaters[0].clone(),
            _ => self.debate.debaters.join("+"),
        }
    }
}
