pub mod backend;
pub mod corpus;
pub mod metrics;
pub mod pipelines;
pub mod report;
pub mod runner;
pub mod scalar;

pub use corpus::{
    dataset_stats, load_dataset, normalize_text, parse_keywords, DatasetStats, KeywordSet,
    QuestionRecord,
};
pub use metrics::{grr, khc, match_keywords, mcr, per_category_mcr, MatchResult, MetricsReport};
pub use scalar::Scalar;

/// Metrics as reported and serialized.
pub type Metrics = MetricsReport<f64>;
/// Metrics computed in exact rational arithmetic.
pub type ExactMetrics = MetricsReport<num_rational::BigRational>;
pub use report::{emit_radar, emit_table, RadarSeries, TableRow};
pub use runner::{
    execute_run, resume_run, score_run, ExperimentConfig, PipelineKind, RunError, RunManifest,
    RunOptions, RunRecord, RunSpec,
};
