#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use plandebate::backend::{fingerprint, BackendRegistry, ScriptedBackend};
use plandebate::pipelines::DebateConfig;
use plandebate::{ExperimentConfig, PipelineKind, RunSpec};

pub const DECOMP_MARKERS: [&str; 2] = ["Break down the following", "Review the plan below"];

pub fn is_decomp_prompt(prompt: &str) -> bool {
    DECOMP_MARKERS.iter().any(|m| prompt.contains(m))
}

/// Writes a dataset file in the published layout.
pub fn write_dataset(dir: &Path, entries: &[(&str, &str, &str, &str)]) -> PathBuf {
    let mut obj = serde_json::Map::new();
    for (id, question, category, answer) in entries {
        obj.insert(
            id.to_string(),
            serde_json::json!({"question": question, "Answer": answer, "Category": category}),
        );
    }
    let path = dir.join("dataset.json");
    std::fs::write(&path, serde_json::to_string_pretty(&obj).unwrap()).unwrap();
    path
}

pub fn four_questions(dir: &Path) -> PathBuf {
    write_dataset(
        dir,
        &[
            (
                "question01",
                "How to plan beams?",
                "Beamforming",
                "mimo, beam sweeping, codebook, csi.",
            ),
            (
                "question02",
                "How to cut latency?",
                "Edge Computing",
                "mec, offloading, caching, dnn partitioning.",
            ),
            (
                "question03",
                "How to save energy?",
                "Energy",
                "sleep modes, dvfs, ris, energy harvesting.",
            ),
            (
                "question04",
                "How to secure links?",
                "Security",
                "pls, artificial noise, key generation, jamming.",
            ),
        ],
    )
}

/// Deterministic backend: decomposition prompts get a two-step plan, every
/// other prompt gets a reply derived from its fingerprint.
pub fn hashing_backend(name: &str) -> ScriptedBackend {
    let n = name.to_string();
    ScriptedBackend::responder(name, move |prompt| {
        if is_decomp_prompt(prompt) {
            return Ok("1. Model the system\n2. Optimize the design".to_string());
        }
        Ok(format!("{n} says {}", &fingerprint(&n, prompt, 0.7)[..12]))
    })
}

pub fn hashing_registry(names: &[&str]) -> BackendRegistry {
    let mut reg = BackendRegistry::new();
    for n in names {
        reg.register(Arc::new(hashing_backend(n))).unwrap();
    }
    reg
}

pub fn spec(dataset: &Path, pipeline: PipelineKind, debate: DebateConfig) -> RunSpec {
    RunSpec {
        dataset_path: dataset.to_path_buf(),
        pipeline,
        config: ExperimentConfig {
            templates: None,
            debate,
            backends: Vec::new(),
        },
        replay_cache: None,
    }
}

pub fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

pub mod golden {
    use plandebate::{RadarSeries, TableRow};

    pub const CATEGORIES: [&str; 11] = [
        "6G-Enabled Digital Twin Network",
        "Artificial Intelligence (AI)-Driven Network Optimization",
        "Blockchain for Secure Wireless Networks",
        "Cell-Free Massive MIMO",
        "Integrated Sensing and Communication (ISAC)",
        "Non-Terrestrial Networks (NTN)",
        "Open Radio Access Network (O-RAN)",
        "Quantum Communication for 6G",
        "Reconfigurable Intelligent Surfaces (RIS)",
        "Semantic Communications",
        "mmWave and Terahertz (THz) Communications",
    ];

    fn row(pipeline: &str, models: &str, mcr: f64, khc: f64, grr: f64) -> TableRow {
        TableRow {
            pipeline: pipeline.into(),
            models: models.into(),
            mcr_percent: mcr,
            khc,
            grr_percent: grr,
        }
    }

    /// Unrounded inputs whose 2-decimal rendering is the published row.
    pub fn table_rows() -> Vec<TableRow> {
        vec![
            row("Baseline", "A", 36.98712, 34.0149, 36.5733),
            row("Regular", "A+B", 49.7521, 45.8688, 49.3349),
            row("Hierarchical", "A+B", 81.19363636, 75.40909091, 81.08745),
        ]
    }

    pub fn radar_input() -> (Vec<String>, Vec<RadarSeries>) {
        let cats = CATEGORIES.iter().map(|s| s.to_string()).collect();
        let series = |label: &str, base: f64, step: f64| RadarSeries {
            label: label.into(),
            values: (0..11)
                .map(|i| base + step * ((i * 7) % 11) as f64)
                .collect(),
        };
        (
            cats,
            vec![
                series("Baseline (A)", 20.0, 2.5),
                series("Regular (A+B)", 35.0, 2.75),
                series("Hierarchical (A+B)", 60.0, 3.5),
            ],
        )
    }
}
