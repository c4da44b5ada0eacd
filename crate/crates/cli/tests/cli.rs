use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plandebate"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_dataset(dir: &Path) -> PathBuf {
    let path = dir.join("dataset.json");
    let json = r#"{
        "question01": {"question": "How to plan beams?", "Answer": "mimo, beam sweeping, codebook, csi.", "Category": "Beamforming"},
        "question02": {"question": "How to cut latency?", "Answer": "mec, offloading.", "Category": "Edge"},
        "question03": {"question": "How to save energy?", "Answer": "sleep modes, dvfs, ris.", "Category": "Energy"}
    }"#;
    std::fs::write(&path, json).unwrap();
    path
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("experiment.toml");
    let toml = r#"
[debate]
debaters = ["a", "b"]

[[backends]]
name = "a"
kind = "scripted"
min_interval_secs = 0.0
responses = ["mimo and codebook", "mec", "nothing", "spare"]

[[backends]]
name = "b"
kind = "scripted"
min_interval_secs = 0.0
responses = ["mimo, codebook, csi", "mec offloading", "dvfs"]
"#;
    std::fs::write(&path, toml).unwrap();
    path
}

fn run_dir(out: &Path) -> (String, PathBuf) {
    let entry = std::fs::read_dir(out).unwrap().next().unwrap().unwrap();
    (entry.file_name().into_string().unwrap(), entry.path())
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(
        code(&run(&[
            "run",
            "--dataset",
            "d",
            "--pipeline",
            "debate",
            "--config",
            "c",
            "--out",
            "o"
        ])),
        1
    );
    assert_eq!(
        code(&run(&[
            "run",
            "--dataset",
            "d",
            "--pipeline",
            "baseline",
            "--config",
            "c",
            "--out",
            "o",
            "--workers",
            "0"
        ])),
        1
    );
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn validate_dataset_reports_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = write_dataset(tmp.path());
    let o = run(&["validate-dataset", "--dataset", ds.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(stats["question_count"], 3);
    assert_eq!(stats["total_gold_keywords"], 9);

    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"question01": {"question": "q", "Answer": "", "Category": "c"}}"#,
    )
    .unwrap();
    assert_eq!(
        code(&run(&[
            "validate-dataset",
            "--dataset",
            bad.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "validate-dataset",
            "--dataset",
            "/nonexistent.json"
        ])),
        2
    );
}

#[test]
fn run_score_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = write_dataset(tmp.path());
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("runs");
    let o = run(&[
        "run",
        "--dataset",
        ds.to_str().unwrap(),
        "--pipeline",
        "regular",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (run_id, dir) = run_dir(&out);
    assert_eq!(stdout(&o).trim(), run_id);
    for f in ["manifest.json", "records.jsonl", "final_solutions.jsonl"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert_eq!(
        std::fs::read_to_string(dir.join("records.jsonl"))
            .unwrap()
            .lines()
            .count(),
        6
    );

    let o = run(&[
        "score",
        "--out",
        out.to_str().unwrap(),
        "--run",
        &run_id,
        "--dataset",
        ds.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    // q1: 3/4 matched, q2: 2/2, q3: 1/3
    let mcr = metrics["mcr_percent"].as_f64().unwrap();
    assert!(
        (mcr - 100.0 * (0.75 + 1.0 + 1.0 / 3.0) / 3.0).abs() < 1e-9,
        "{mcr}"
    );
    assert_eq!(metrics["models"], "a+b");

    let table = tmp.path().join("t.csv");
    let radar = tmp.path().join("r.svg");
    let o = run(&[
        "report",
        "--out",
        out.to_str().unwrap(),
        "--runs",
        &run_id,
        "--table",
        table.to_str().unwrap(),
        "--radar",
        radar.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(
        csv,
        "pipeline,models,MCR,KHC,GRR\nRegular,a+b,69.44,2.00,66.67\n"
    );
    assert!(std::fs::read_to_string(&radar)
        .unwrap()
        .contains("Regular (a+b)"));

    let o = run(&["report", "--out", out.to_str().unwrap(), "--runs", &run_id]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), csv);

    // finished run: resume is a no-op
    let before = std::fs::read(dir.join("records.jsonl")).unwrap();
    let o = run(&["resume", "--out", out.to_str().unwrap(), "--run", &run_id]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(dir.join("records.jsonl")).unwrap(), before);
}

#[test]
fn runtime_failures_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = write_dataset(tmp.path());
    let out = tmp.path().join("runs");
    let o = run(&[
        "run",
        "--dataset",
        ds.to_str().unwrap(),
        "--pipeline",
        "baseline",
        "--config",
        "/nonexistent.toml",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(
        code(&run(&[
            "resume",
            "--out",
            out.to_str().unwrap(),
            "--run",
            "nope"
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "score",
            "--out",
            out.to_str().unwrap(),
            "--run",
            "nope",
            "--dataset",
            ds.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&run(&[
            "report",
            "--out",
            out.to_str().unwrap(),
            "--runs",
            "nope"
        ])),
        2
    );
}
