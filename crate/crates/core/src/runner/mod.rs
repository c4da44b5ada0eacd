//! Experiment execution over a bounded worker pool with an append-only run log.
//!
//! Layout of one run directory `<out>/<run_id>/`:
//!
//! - `manifest.json`: written before any call
//! - `records.jsonl`: one line per backend call, plus tombstones on resume
//! - `final_solutions.jsonl`: one line per finished question, sorted by id at
//!   the end of the run
//! - `failures.jsonl`: questions whose pipeline failed
//! - `metrics.json`: written by [`score_run`]

mod config;
mod log;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backend::{BackendError, BackendRegistry, Clock};
use crate::corpus::{parse_dataset, CorpusError, QuestionRecord};
use crate::metrics::{match_keywords, MatchResult, MetricsError, MetricsReport};
use crate::pipelines::{
    DebateConfig, PipelineError, PipelineOutput, Pipelines, Stage, StageEntry, TemplateError,
    TemplateLibrary,
};

pub use config::{ExperimentConfig, PipelineKind};
pub use log::{read_jsonl, JsonlWriter};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SOLUTIONS_FILE: &str = "final_solutions.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const DEFAULT_WORKERS: usize = 16;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("output directory {path} is not writable: {source}")]
    OutDirUnwritable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("backend {0:?} is not registered")]
    BackendUnregistered(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("dataset digest mismatch: run expects {expected}, file has {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error("no manifest at {0}")]
    ManifestMissing(String),
    #[error("no final solutions at {0}")]
    SolutionsMissing(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {path}: {msg}")]
    Malformed { path: String, msg: String },
    #[error("run {run_id} interrupted with {remaining} question(s) unfinished")]
    Interrupted { run_id: String, remaining: usize },
}

impl From<PipelineError> for RunError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::UnknownBackend(n) => RunError::BackendUnregistered(n),
            other => RunError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub pipeline: PipelineKind,
    pub config: ExperimentConfig,
    pub dataset_path: PathBuf,
    pub dataset_digest: String,
    pub worker_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_cache: Option<PathBuf>,
    pub created_at: String,
}

impl RunManifest {
    pub fn load(out_dir: &Path, run_id: &str) -> Result<Self, RunError> {
        let path = out_dir.join(run_id).join(MANIFEST_FILE);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(RunError::ManifestMissing(path.display().to_string()))
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        serde_json::from_slice(&bytes).map_err(|e| RunError::Malformed {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    /// Rebuilds the configured backends, including the replay cache wrapper.
    pub fn build_backends(&self, clock: Arc<dyn Clock>) -> Result<BackendRegistry, RunError> {
        Ok(BackendRegistry::from_configs(
            &self.config.backends,
            clock,
            self.replay_cache.as_deref(),
        )?)
    }

    pub fn models_label(&self) -> String {
        self.config.models_label(self.pipeline)
    }
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RunRecord {
    Call {
        run_id: String,
        question_id: String,
        stage: Stage,
        backend: String,
        model: String,
        prompt: String,
        response: String,
        started_ms: u64,
        finished_ms: u64,
        attempt_count: u32,
    },
    /// Earlier call records for the question are stale; it restarted.
    Tombstone {
        run_id: String,
        question_id: String,
        superseded: usize,
    },
}

impl RunRecord {
    fn call(run_id: &str, question_id: &str, e: &StageEntry) -> Self {
        RunRecord::Call {
            run_id: run_id.to_string(),
            question_id: question_id.to_string(),
            stage: e.stage,
            backend: e.backend.clone(),
            model: e.model.clone(),
            prompt: e.prompt.clone(),
            response: e.response.clone(),
            started_ms: e.started.as_millis() as u64,
            finished_ms: e.finished.as_millis() as u64,
            attempt_count: e.attempt_count,
        }
    }

    pub fn question_id(&self) -> &str {
        match self {
            RunRecord::Call { question_id, .. } | RunRecord::Tombstone { question_id, .. } => {
                question_id
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalSolution {
    pub question_id: String,
    pub final_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub question_id: String,
    pub error: String,
    pub completed_calls: usize,
}

/// What to run: everything that ends up in the manifest.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub dataset_path: PathBuf,
    pub pipeline: PipelineKind,
    pub config: ExperimentConfig,
    pub replay_cache: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    /// When set, no new question is started; in-flight ones finish.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: DEFAULT_WORKERS,
            cancel: None,
        }
    }
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }
}

pub fn dataset_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_dataset(path: &Path) -> Result<(Vec<QuestionRecord>, String), RunError> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| CorpusError::Parse(e.to_string()))?;
    let digest = dataset_digest(text.as_bytes());
    Ok((parse_dataset(&text)?, digest))
}

fn new_run_id() -> String {
    format!(
        "{}-{:06x}",
        chrono::Utc::now().format("%Y%m%dT%H%M%SZ"),
        rand::random::<u32>() & 0xff_ffff
    )
}

fn check_backends(debate: &DebateConfig, backends: &BackendRegistry) -> Result<(), RunError> {
    for name in &debate.debaters {
        if !backends.contains(name) {
            return Err(RunError::BackendUnregistered(name.clone()));
        }
    }
    Ok(())
}

/// Runs `spec.pipeline` over every question of the dataset.
pub fn execute_run(
    spec: &RunSpec,
    backends: &BackendRegistry,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunManifest, RunError> {
    spec.config.debate.validate()?;
    check_backends(&spec.config.debate, backends)?;
    let templates = spec.config.template_library()?;
    let (dataset, digest) = read_dataset(&spec.dataset_path)?;

    let manifest = RunManifest {
        run_id: new_run_id(),
        pipeline: spec.pipeline,
        config: spec.config.redacted(),
        dataset_path: spec.dataset_path.clone(),
        dataset_digest: digest,
        worker_count: opts.workers.max(1),
        replay_cache: spec.replay_cache.clone(),
        created_at: chrono::Utc::now().to_rfc3339(),
    };
    let run_dir = out_dir.join(&manifest.run_id);
    let unwritable = |source| RunError::OutDirUnwritable {
        path: run_dir.display().to_string(),
        source,
    };
    fs::create_dir_all(&run_dir).map_err(unwritable)?;
    let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(run_dir.join(MANIFEST_FILE), body).map_err(unwritable)?;

    let pending: Vec<&QuestionRecord> = dataset.iter().collect();
    process(
        &manifest,
        &spec.config.debate,
        &run_dir,
        &pending,
        backends,
        &templates,
        opts,
    )?;
    Ok(manifest)
}

/// Continues an interrupted run. Finished questions are skipped; questions
/// with stale calls get a tombstone and restart from scratch.
pub fn resume_run(
    out_dir: &Path,
    run_id: &str,
    backends: &BackendRegistry,
    opts: &RunOptions,
) -> Result<RunManifest, RunError> {
    let manifest = RunManifest::load(out_dir, run_id)?;
    let run_dir = out_dir.join(run_id);
    let (dataset, digest) = read_dataset(&manifest.dataset_path)?;
    if digest != manifest.dataset_digest {
        return Err(RunError::DigestMismatch {
            expected: manifest.dataset_digest.clone(),
            actual: digest,
        });
    }
    check_backends(&manifest.config.debate, backends)?;
    let templates = manifest.config.template_library()?;

    let done: BTreeSet<String> = read_solutions(&run_dir)?
        .map(|s| s.into_keys().collect())
        .unwrap_or_default();
    let stale = live_call_counts(&run_dir.join(RECORDS_FILE))?;

    let writer = JsonlWriter::open(&run_dir.join(RECORDS_FILE))?;
    for (qid, n) in &stale {
        if !done.contains(qid) && *n > 0 {
            writer.append(&RunRecord::Tombstone {
                run_id: manifest.run_id.clone(),
                question_id: qid.clone(),
                superseded: *n,
            })?;
        }
    }
    drop(writer);

    let pending: Vec<&QuestionRecord> = dataset.iter().filter(|q| !done.contains(&q.id)).collect();
    process(
        &manifest,
        &manifest.config.debate,
        &run_dir,
        &pending,
        backends,
        &templates,
        opts,
    )?;
    Ok(manifest)
}

/// Number of call records per question after its last tombstone.
fn live_call_counts(path: &Path) -> Result<BTreeMap<String, usize>, RunError> {
    let mut counts = BTreeMap::new();
    for rec in read_jsonl::<RunRecord>(path)? {
        match rec {
            RunRecord::Call { question_id, .. } => *counts.entry(question_id).or_insert(0) += 1,
            RunRecord::Tombstone { question_id, .. } => {
                counts.insert(question_id, 0);
            }
        }
    }
    Ok(counts)
}

fn read_solutions(run_dir: &Path) -> Result<Option<BTreeMap<String, String>>, RunError> {
    let path = run_dir.join(SOLUTIONS_FILE);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(
        read_jsonl::<FinalSolution>(&path)?
            .into_iter()
            .map(|s| (s.question_id, s.final_text))
            .collect(),
    ))
}

fn run_pipeline(
    pipelines: &Pipelines<'_>,
    kind: PipelineKind,
    debate: &DebateConfig,
    q: &QuestionRecord,
) -> Result<PipelineOutput, PipelineError> {
    match kind {
        PipelineKind::Baseline => pipelines.run_baseline(q, &debate.debaters[0]),
        PipelineKind::Regular => pipelines.run_regular_debate(q, debate),
        PipelineKind::Hierarchical => pipelines.run_hierarchical(q, debate),
    }
}

fn process(
    manifest: &RunManifest,
    debate: &DebateConfig,
    run_dir: &Path,
    pending: &[&QuestionRecord],
    backends: &BackendRegistry,
    templates: &TemplateLibrary,
    opts: &RunOptions,
) -> Result<(), RunError> {
    let records = JsonlWriter::open(&run_dir.join(RECORDS_FILE))?;
    let solutions = JsonlWriter::open(&run_dir.join(SOLUTIONS_FILE))?;
    let failures = JsonlWriter::open(&run_dir.join(FAILURES_FILE))?;
    let next = AtomicUsize::new(0);
    let write_error: std::sync::Mutex<Option<RunError>> = std::sync::Mutex::new(None);
    let cancelled = || {
        opts.cancel
            .as_ref()
            .is_some_and(|c| c.load(Ordering::SeqCst))
    };

    let worker = || loop {
        if cancelled() || write_error.lock().unwrap().is_some() {
            break;
        }
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(q) = pending.get(i) else { break };

        let record_call = |e: &StageEntry| {
            if let Err(err) = records.append(&RunRecord::call(&manifest.run_id, &q.id, e)) {
                write_error.lock().unwrap().get_or_insert(err);
            }
        };
        let pipelines = Pipelines::new(backends, templates).with_observer(&record_call);
        let outcome = match run_pipeline(&pipelines, manifest.pipeline, debate, q) {
            Ok(out) => solutions.append(&FinalSolution {
                question_id: q.id.clone(),
                final_text: out.final_text,
            }),
            Err(e) => {
                ::log::warn!("question {} failed: {e}", q.id);
                failures.append(&FailureRecord {
                    question_id: q.id.clone(),
                    error: e.to_string(),
                    completed_calls: e.partial_log().len(),
                })
            }
        };
        if let Err(err) = outcome {
            write_error.lock().unwrap().get_or_insert(err);
        }
    };

    let workers = opts.workers.clamp(1, pending.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(worker);
        }
    });
    if let Some(err) = write_error.into_inner().unwrap() {
        return Err(err);
    }

    let started = next.load(Ordering::SeqCst).min(pending.len());
    if started < pending.len() {
        return Err(RunError::Interrupted {
            run_id: manifest.run_id.clone(),
            remaining: pending.len() - started,
        });
    }
    drop(solutions);
    finalize_solutions(run_dir)
}

/// Rewrites `final_solutions.jsonl` sorted by question id.
fn finalize_solutions(run_dir: &Path) -> Result<(), RunError> {
    let path = run_dir.join(SOLUTIONS_FILE);
    let sorted = read_solutions(run_dir)?.unwrap_or_default();
    let mut body = String::new();
    for (question_id, final_text) in sorted {
        let line = serde_json::to_string(&FinalSolution {
            question_id,
            final_text,
        })
        .expect("solution serializes");
        body.push_str(&line);
        body.push('\n');
    }
    let tmp = path.with_extension("jsonl.tmp");
    fs::write(&tmp, body).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub category: String,
    pub solved: bool,
    pub gold_size: usize,
    pub matched_count: usize,
    pub matched: Vec<String>,
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub run_id: String,
    pub pipeline: Option<PipelineKind>,
    pub models: Option<String>,
    #[serde(flatten)]
    pub metrics: MetricsReport<f64>,
    pub questions: Vec<QuestionScore>,
}

/// Scores a run's final solutions. Questions without a solution count as
/// zero matched.
pub fn score_run(
    out_dir: &Path,
    run_id: &str,
    dataset: &[QuestionRecord],
) -> Result<ScoreReport, RunError> {
    let run_dir = out_dir.join(run_id);
    let solutions = read_solutions(&run_dir)?.ok_or_else(|| {
        RunError::SolutionsMissing(run_dir.join(SOLUTIONS_FILE).display().to_string())
    })?;
    let manifest = RunManifest::load(out_dir, run_id).ok();

    let mut results: Vec<MatchResult> = Vec::with_capacity(dataset.len());
    let mut questions = Vec::with_capacity(dataset.len());
    for q in dataset {
        let (result, solved) = match solutions.get(&q.id) {
            Some(text) => (match_keywords(&q.id, text, &q.gold)?, true),
            None => (MatchResult::unmatched(&q.id, &q.gold), false),
        };
        questions.push(QuestionScore {
            question_id: q.id.clone(),
            category: q.category.clone(),
            solved,
            gold_size: result.gold_size,
            matched_count: result.matched_count,
            matched: result.matched.as_slice().to_vec(),
        });
        results.push(result);
    }
    let report = ScoreReport {
        run_id: run_id.to_string(),
        pipeline: manifest.as_ref().map(|m| m.pipeline),
        models: manifest.as_ref().map(RunManifest::models_label),
        metrics: MetricsReport::from_results(&results, dataset)?,
        questions,
    };
    let path = run_dir.join(METRICS_FILE);
    let mut body = serde_json::to_vec_pretty(&report).expect("report serializes");
    body.push(b'\n');
    fs::write(&path, body).map_err(io_err(&path))?;
    Ok(report)
}

pub fn load_score(out_dir: &Path, run_id: &str) -> Result<ScoreReport, RunError> {
    let path = out_dir.join(run_id).join(METRICS_FILE);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&bytes).map_err(|e| RunError::Malformed {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Final solutions of a run as a map from question id.
pub fn load_solutions(out_dir: &Path, run_id: &str) -> Result<HashMap<String, String>, RunError> {
    let run_dir = out_dir.join(run_id);
    Ok(read_solutions(&run_dir)?
        .ok_or_else(|| {
            RunError::SolutionsMissing(run_dir.join(SOLUTIONS_FILE).display().to_string())
        })?
        .into_iter()
        .collect())
}
