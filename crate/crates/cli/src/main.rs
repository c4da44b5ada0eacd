use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use plandebate::backend::{BackendRegistry, SystemClock};
use plandebate::report::{render_table, RadarSeries, TableRow};
use plandebate::runner::{load_score, ScoreReport};
use plandebate::{
    dataset_stats, emit_radar, emit_table, execute_run, load_dataset, resume_run, score_run,
    ExperimentConfig, PipelineKind, RunManifest, RunOptions, RunSpec,
};

#[derive(Debug, Parser)]
#[command(
    name = "plandebate",
    version,
    about = "Multi-agent debate runs over a planning question set"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a pipeline over every question of a dataset.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        pipeline: PipelineKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u16).range(1..))]
        workers: u16,
        /// Record every backend response here and serve repeats from it.
        #[arg(long)]
        replay_cache: Option<PathBuf>,
    },
    /// Finish an interrupted run.
    Resume {
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "run")]
        run_id: String,
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        workers: Option<u16>,
    },
    /// Score a run's final solutions and write metrics.json.
    Score {
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "run")]
        run_id: String,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Build a results table and radar chart from scored runs.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<String>,
        #[arg(long)]
        radar: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Check a dataset file and print its statistics.
    ValidateDataset {
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            dataset,
            pipeline,
            config,
            out,
            workers,
            replay_cache,
        } => {
            let config = ExperimentConfig::load(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            if replay_cache.is_none() {
                require_credentials(&config)?;
            }
            let backends = BackendRegistry::from_configs(
                &config.backends,
                Arc::new(SystemClock::new()),
                replay_cache.as_deref(),
            )?;
            let spec = RunSpec {
                dataset_path: dataset,
                pipeline,
                config,
                replay_cache,
            };
            let manifest = execute_run(
                &spec,
                &backends,
                &out,
                &RunOptions::with_workers(workers.into()),
            )?;
            report_run(&out, &manifest)
        }
        Command::Resume {
            out,
            run_id,
            workers,
        } => {
            let manifest = RunManifest::load(&out, &run_id)?;
            if manifest.replay_cache.is_none() {
                require_credentials(&manifest.config)?;
            }
            let backends = manifest.build_backends(Arc::new(SystemClock::new()))?;
            let workers = workers.map_or(manifest.worker_count, usize::from);
            let manifest =
                resume_run(&out, &run_id, &backends, &RunOptions::with_workers(workers))?;
            report_run(&out, &manifest)
        }
        Command::Score {
            out,
            run_id,
            dataset,
        } => {
            let records = load_dataset(&dataset)?;
            let report = score_run(&out, &run_id, &records)?;
            let m = &report.metrics;
            println!(
                "{run_id}: MCR {:.2}  KHC {:.2}  GRR {:.2}  ({} questions)",
                m.mcr_percent, m.khc, m.grr_percent, m.n_questions
            );
            Ok(())
        }
        Command::Report {
            out,
            runs,
            radar,
            table,
        } => report(&out, &runs, radar.as_deref(), table.as_deref()),
        Command::ValidateDataset { dataset } => {
            let records = load_dataset(&dataset)?;
            let stats = dataset_stats(&records);
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(())
        }
    }
}

fn require_credentials(config: &ExperimentConfig) -> Result<()> {
    let missing = config.missing_credentials();
    if missing.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = missing
        .iter()
        .map(|(b, env)| format!("{env} (for {b})"))
        .collect();
    bail!("credential variables not set: {}", list.join(", "))
}

fn report_run(out: &Path, manifest: &RunManifest) -> Result<()> {
    let dir = out.join(&manifest.run_id);
    let failures = std::fs::read_to_string(dir.join(plandebate::runner::FAILURES_FILE))
        .map(|s| s.lines().count())
        .unwrap_or(0);
    println!("{}", manifest.run_id);
    if failures > 0 {
        eprintln!(
            "{failures} question(s) failed; see {}",
            dir.join("failures.jsonl").display()
        );
    }
    Ok(())
}

fn report(out: &Path, runs: &[String], radar: Option<&Path>, table: Option<&Path>) -> Result<()> {
    let scores: Vec<ScoreReport> = runs
        .iter()
        .map(|id| load_score(out, id).with_context(|| format!("run {id} has not been scored")))
        .collect::<Result<_>>()?;

    let rows: Vec<TableRow> = scores
        .iter()
        .map(|s| TableRow {
            pipeline: s
                .pipeline
                .map_or("unknown", PipelineKind::label)
                .to_string(),
            models: s.models.clone().unwrap_or_default(),
            mcr_percent: s.metrics.mcr_percent,
            khc: s.metrics.khc,
            grr_percent: s.metrics.grr_percent,
        })
        .collect();
    match table {
        Some(path) => emit_table(&rows, path)?,
        None if radar.is_none() => print!("{}", render_table(&rows)?),
        None => {}
    }

    if let Some(path) = radar {
        let categories: Vec<String> = scores[0].metrics.per_category_mcr.keys().cloned().collect();
        let mut series = Vec::with_capacity(scores.len());
        for (s, row) in scores.iter().zip(&rows) {
            let cats: Vec<&String> = s.metrics.per_category_mcr.keys().collect();
            if cats.len() != categories.len() || cats.iter().zip(&categories).any(|(a, b)| *a != b)
            {
                bail!("run {} was scored on different categories", s.run_id);
            }
            series.push(RadarSeries {
                label: format!("{} ({})", row.pipeline, row.models),
                values: s.metrics.per_category_mcr.values().copied().collect(),
            });
        }
        emit_radar(&categories, &series, path)?;
    }
    Ok(())
}
