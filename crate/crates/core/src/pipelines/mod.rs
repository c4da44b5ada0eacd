//! Baseline, regular-debate and hierarchical-debate pipelines.
//!
//! Every pipeline is a fixed sequence of single-prompt backend calls. Debate
//! turns pass the previous response forward as `{sol}`; within a sequence the
//! `t`-th call goes to `debaters[(t - 1) % M]`.
//!
//! Call counts:
//! - baseline: 1
//! - regular: `N * M`
//! - hierarchical: `N_decomp * M + k * N_sub * M` for `k` parsed sub-tasks

mod subtasks;
mod template;

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, BackendRegistry, ChatBackend};
use crate::corpus::QuestionRecord;

pub use subtasks::{parse_subtasks, SubTask};
pub use template::{
    Bindings, Placeholder, PromptTemplate, TemplateError, TemplateLibrary, DEFAULT_TEMPLATES,
    REQUIRED_TEMPLATES,
};

fn one() -> usize {
    1
}
fn default_parallelism() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebateConfig {
    /// Backend names in speaking order. The baseline pipeline uses the first.
    pub debaters: Vec<String>,
    #[serde(default = "one")]
    pub regular_rounds: usize,
    #[serde(default = "one")]
    pub decomp_rounds: usize,
    #[serde(default = "one")]
    pub subtask_rounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_subtasks: Option<usize>,
    /// Initial decomposition to refine instead of starting from scratch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_steps: Option<String>,
    /// Sub-task debates of one question allowed to run at once.
    #[serde(default = "default_parallelism")]
    pub subtask_parallelism: usize,
}

impl DebateConfig {
    pub fn new<I, S>(debaters: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            debaters: debaters.into_iter().map(Into::into).collect(),
            regular_rounds: 1,
            decomp_rounds: 1,
            subtask_rounds: 1,
            max_subtasks: None,
            seed_steps: None,
            subtask_parallelism: default_parallelism(),
        }
    }

    pub fn with_rounds(mut self, regular: usize, decomp: usize, subtask: usize) -> Self {
        self.regular_rounds = regular;
        self.decomp_rounds = decomp;
        self.subtask_rounds = subtask;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.to_string()));
        if self.debaters.is_empty() {
            return bad("at least one debater is required");
        }
        if self.regular_rounds == 0 || self.decomp_rounds == 0 || self.subtask_rounds == 0 {
            return bad("round counts must be >= 1");
        }
        if self.max_subtasks == Some(0) {
            return bad("max_subtasks must be >= 1 when set");
        }
        if self.subtask_parallelism == 0 {
            return bad("subtask_parallelism must be >= 1");
        }
        Ok(())
    }
}

/// Where a call sits in a pipeline. Rounds, debaters and sub-task indices
/// are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Baseline,
    Regular {
        round: usize,
        debater: usize,
    },
    Decomp {
        round: usize,
        debater: usize,
    },
    Subtask {
        index: usize,
        round: usize,
        debater: usize,
    },
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Baseline => f.write_str("baseline"),
            Stage::Regular { round, debater } => {
                write!(f, "regular(round {round}, debater {debater})")
            }
            Stage::Decomp { round, debater } => {
                write!(f, "decomp(round {round}, debater {debater})")
            }
            Stage::Subtask {
                index,
                round,
                debater,
            } => write!(f, "subtask {index}(round {round}, debater {debater})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageEntry {
    pub stage: Stage,
    pub backend: String,
    pub model: String,
    pub prompt: String,
    pub response: String,
    pub started: Duration,
    pub finished: Duration,
    pub attempt_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub final_text: String,
    pub stage_log: Vec<StageEntry>,
    pub subtasks: Option<Vec<SubTask>>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid debate config: {0}")]
    InvalidConfig(String),
    #[error("backend {0:?} is not registered")]
    UnknownBackend(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{stage}: {source}")]
    Backend {
        stage: Stage,
        #[source]
        source: BackendError,
        partial: Vec<StageEntry>,
    },
    #[error("decomposition produced no sub-tasks")]
    DecompositionEmpty { partial: Vec<StageEntry> },
}

impl PipelineError {
    /// Calls that completed before the failure.
    pub fn partial_log(&self) -> &[StageEntry] {
        match self {
            PipelineError::Backend { partial, .. }
            | PipelineError::DecompositionEmpty { partial } => partial,
            _ => &[],
        }
    }
}

/// Called after every successful backend call, possibly from several threads.
pub type CallObserver<'a> = &'a (dyn Fn(&StageEntry) + Sync);

/// Which template family a debate sequence draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Regular,
    Subtask,
}

impl Family {
    fn prefix(self) -> &'static str {
        match self {
            Family::Regular => "regular",
            Family::Subtask => "subtask",
        }
    }
}

/// Template id for call `(round, debater)` of an `rounds`-round debate.
///
/// Single-round debates use the one-round wording; multi-round debates use
/// per-round wording, with rounds past the third reusing the third. Debater
/// parity picks the "Debater 1"/"Debater 2" text; an odd-position debater
/// after the opening call gets the refining Debater-1 text so that it still
/// sees the previous answer.
fn debate_template_id(family: Family, rounds: usize, round: usize, debater: usize) -> String {
    let opening = round == 1 && debater == 1;
    let parity = if debater % 2 == 1 { 1 } else { 2 };
    let p = family.prefix();
    if opening {
        return if rounds == 1 {
            format!("{p}.one_round.d1")
        } else {
            format!("{p}.round1.d1")
        };
    }
    if parity == 1 && round == 1 {
        return format!("{p}.round2.d1");
    }
    if rounds == 1 {
        return format!("{p}.one_round.d2");
    }
    format!("{p}.round{}.d{parity}", round.min(3))
}

fn decomp_template_id(call: usize, seeded: bool) -> &'static str {
    match (call, seeded) {
        (1, false) => "decomp.initial",
        (1, true) | (2, false) => "decomp.review",
        _ => "decomp.refine",
    }
}

/// Runs pipelines against a set of registered backends.
pub struct Pipelines<'a> {
    backends: &'a BackendRegistry,
    templates: &'a TemplateLibrary,
    observer: Option<CallObserver<'a>>,
}

impl<'a> Pipelines<'a> {
    pub fn new(backends: &'a BackendRegistry, templates: &'a TemplateLibrary) -> Self {
        Self {
            backends,
            templates,
            observer: None,
        }
    }

    pub fn with_observer(mut self, observer: CallObserver<'a>) -> Self {
        self.observer = Some(observer);
        self
    }

    fn backend(&self, name: &str) -> Result<&'a dyn ChatBackend, PipelineError> {
        self.backends
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| PipelineError::UnknownBackend(name.to_string()))
    }

    fn check(&self, cfg: &DebateConfig) -> Result<(), PipelineError> {
        cfg.validate()?;
        for name in &cfg.debaters {
            self.backend(name)?;
        }
        Ok(())
    }

    fn call(
        &self,
        stage: Stage,
        backend: &dyn ChatBackend,
        prompt: String,
        log: &[StageEntry],
    ) -> Result<StageEntry, PipelineError> {
        let c = backend
            .complete(&prompt)
            .map_err(|source| PipelineError::Backend {
                stage,
                source,
                partial: log.to_vec(),
            })?;
        let entry = StageEntry {
            stage,
            backend: backend.name().to_string(),
            model: c.model,
            prompt,
            response: c.text,
            started: c.started,
            finished: c.finished,
            attempt_count: c.attempt_count,
        };
        if let Some(obs) = self.observer {
            obs(&entry);
        }
        Ok(entry)
    }

    pub fn run_baseline(
        &self,
        q: &QuestionRecord,
        backend: &str,
    ) -> Result<PipelineOutput, PipelineError> {
        let b = self.backend(backend)?;
        let prompt = self.templates.render(
            "baseline",
            &Bindings {
                category: Some(&q.category),
                question: Some(&q.question),
                ..Default::default()
            },
        )?;
        let entry = self.call(Stage::Baseline, b, prompt, &[])?;
        Ok(PipelineOutput {
            final_text: entry.response.clone(),
            stage_log: vec![entry],
            subtasks: None,
        })
    }

    /// Runs `rounds` rounds over the roster, chaining each response into the
    /// next prompt. Returns the last response.
    fn debate(
        &self,
        q: &QuestionRecord,
        cfg: &DebateConfig,
        family: Family,
        rounds: usize,
        subtask: Option<&SubTask>,
        log: &mut Vec<StageEntry>,
    ) -> Result<String, PipelineError> {
        let mut current: Option<String> = None;
        for round in 1..=rounds {
            for (j, name) in cfg.debaters.iter().enumerate() {
                let debater = j + 1;
                let b = self.backend(name)?;
                let id = debate_template_id(family, rounds, round, debater);
                let prompt = self.templates.render(
                    &id,
                    &Bindings {
                        category: Some(&q.category),
                        question: Some(&q.question),
                        sol: current.as_deref(),
                        st: subtask.map(|s| s.text.as_str()),
                    },
                )?;
                let stage = match subtask {
                    None => Stage::Regular { round, debater },
                    Some(s) => Stage::Subtask {
                        index: s.index,
                        round,
                        debater,
                    },
                };
                let entry = self.call(stage, b, prompt, log)?;
                current = Some(entry.response.clone());
                log.push(entry);
            }
        }
        Ok(current.expect("at least one call"))
    }

    pub fn run_regular_debate(
        &self,
        q: &QuestionRecord,
        cfg: &DebateConfig,
    ) -> Result<PipelineOutput, PipelineError> {
        self.check(cfg)?;
        let mut log = Vec::new();
        let final_text =
            self.debate(q, cfg, Family::Regular, cfg.regular_rounds, None, &mut log)?;
        Ok(PipelineOutput {
            final_text,
            stage_log: log,
            subtasks: None,
        })
    }

    fn decomposition(
        &self,
        q: &QuestionRecord,
        cfg: &DebateConfig,
        log: &mut Vec<StageEntry>,
    ) -> Result<Vec<SubTask>, PipelineError> {
        let seed = cfg.seed_steps.as_deref().filter(|s| !s.trim().is_empty());
        let mut current = seed.map(str::to_string);
        let mut call = 0;
        for round in 1..=cfg.decomp_rounds {
            for (j, name) in cfg.debaters.iter().enumerate() {
                call += 1;
                let b = self.backend(name)?;
                let prompt = self.templates.render(
                    decomp_template_id(call, seed.is_some()),
                    &Bindings {
                        category: Some(&q.category),
                        question: Some(&q.question),
                        sol: current.as_deref(),
                        st: None,
                    },
                )?;
                let stage = Stage::Decomp {
                    round,
                    debater: j + 1,
                };
                let entry = self.call(stage, b, prompt, log)?;
                current = Some(entry.response.clone());
                log.push(entry);
            }
        }
        let mut subtasks = parse_subtasks(current.as_deref().unwrap_or_default());
        if let Some(cap) = cfg.max_subtasks {
            subtasks.truncate(cap);
        }
        if subtasks.is_empty() {
            return Err(PipelineError::DecompositionEmpty {
                partial: log.clone(),
            });
        }
        Ok(subtasks)
    }

    /// Phase 1: debate the decomposition and parse the final plan.
    pub fn run_decomposition_debate(
        &self,
        q: &QuestionRecord,
        cfg: &DebateConfig,
    ) -> Result<(Vec<SubTask>, Vec<StageEntry>), PipelineError> {
        self.check(cfg)?;
        let mut log = Vec::new();
        let subtasks = self.decomposition(q, cfg, &mut log)?;
        Ok((subtasks, log))
    }

    /// Phase 2 for one sub-task. Returns the final answer and its calls.
    pub fn run_subtask_debate(
        &self,
        q: &QuestionRecord,
        st: &SubTask,
        cfg: &DebateConfig,
    ) -> Result<(String, Vec<StageEntry>), PipelineError> {
        self.check(cfg)?;
        let mut log = Vec::new();
        let answer = self.debate(
            q,
            cfg,
            Family::Subtask,
            cfg.subtask_rounds,
            Some(st),
            &mut log,
        )?;
        Ok((answer, log))
    }

    pub fn run_hierarchical(
        &self,
        q: &QuestionRecord,
        cfg: &DebateConfig,
    ) -> Result<PipelineOutput, PipelineError> {
        self.check(cfg)?;
        let mut log = Vec::new();
        let subtasks = self.decomposition(q, cfg, &mut log)?;

        type Slot = Option<Result<(String, Vec<StageEntry>), PipelineError>>;
        let results: Mutex<Vec<Slot>> = Mutex::new((0..subtasks.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let workers = cfg.subtask_parallelism.min(subtasks.len());
        let work = || loop {
            if abort.load(Ordering::SeqCst) {
                break;
            }
            let i = next.fetch_add(1, Ordering::SeqCst);
            let Some(st) = subtasks.get(i) else { break };
            let mut sub_log = Vec::new();
            let res = self
                .debate(
                    q,
                    cfg,
                    Family::Subtask,
                    cfg.subtask_rounds,
                    Some(st),
                    &mut sub_log,
                )
                .map(|answer| (answer, sub_log));
            if res.is_err() {
                abort.store(true, Ordering::SeqCst);
            }
            results.lock().unwrap()[i] = Some(res);
        };
        if workers <= 1 {
            work();
        } else {
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(work);
                }
            });
        }

        let mut sections = Vec::with_capacity(subtasks.len());
        let mut failure = None;
        for (st, slot) in subtasks.iter().zip(results.into_inner().unwrap()) {
            match slot {
                Some(Ok((answer, sub_log))) => {
                    log.extend(sub_log);
                    sections.push(format!("## Sub-task {}: {}\n{}", st.index, st.text, answer));
                }
                Some(Err(e)) => {
                    let partial = e.partial_log().to_vec();
                    log.extend(partial);
                    failure.get_or_insert(e);
                }
                None => {}
            }
        }
        if let Some(e) = failure {
            // Keep every call made for this question, in sub-task order.
            return Err(match e {
                PipelineError::Backend { stage, source, .. } => PipelineError::Backend {
                    stage,
                    source,
                    partial: log,
                },
                other => other,
            });
        }
        Ok(PipelineOutput {
            final_text: sections.join("\n\n"),
            stage_log: log,
            subtasks: Some(subtasks),
        })
    }
}
