//! Acceptance suite. Prints one PASS/FAIL/BLOCKED line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use plandebate::backend::{
    BackendRegistry, ChatBackend, Clock, MockClock, ReplayBackend, ScriptedBackend,
};
use plandebate::corpus::parse_dataset;
use plandebate::pipelines::{parse_subtasks, DebateConfig, Pipelines, TemplateLibrary};
use plandebate::report::{render_radar, render_table};
use plandebate::runner::{load_solutions, SOLUTIONS_FILE};
use plandebate::{
    execute_run, grr, khc, load_dataset, match_keywords, mcr, parse_keywords, resume_run,
    score_run, ExactMetrics, KeywordSet, MatchResult, PipelineKind, QuestionRecord, RunError,
    RunOptions,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

enum Verdict {
    Pass(String),
    Blocked(String),
}

type Criterion = fn() -> Verdict;

fn main() {
    let criteria: [(u8, &str, Duration, Criterion); 9] = [
        (
            1,
            "metric oracle equivalence",
            Duration::from_secs(10),
            criterion_1,
        ),
        (2, "metric identities", Duration::from_secs(5), criterion_2),
        (
            3,
            "call-count contracts",
            Duration::from_secs(5),
            criterion_3,
        ),
        (4, "sub-task parser", Duration::from_secs(1), criterion_4),
        (
            5,
            "determinism and resume",
            Duration::from_secs(30),
            criterion_5,
        ),
        (6, "rate limiting", Duration::from_secs(5), criterion_6),
        (7, "dataset validation", Duration::from_secs(2), criterion_7),
        (
            8,
            "synthetic end-to-end ordering",
            Duration::from_secs(10),
            criterion_8,
        ),
        (
            9,
            "report golden files",
            Duration::from_secs(1),
            criterion_9,
        ),
    ];
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(run));
        let took = start.elapsed();
        let line = match res {
            Ok(_) if took > budget => {
                failed += 1;
                format!(
                    "FAIL ({:.2}s, budget {}s)",
                    took.as_secs_f64(),
                    budget.as_secs()
                )
            }
            Ok(Verdict::Pass(detail)) => format!("PASS ({:.2}s) {detail}", took.as_secs_f64()),
            Ok(Verdict::Blocked(why)) => format!("BLOCKED ({:.2}s) {why}", took.as_secs_f64()),
            Err(_) => {
                failed += 1;
                format!("FAIL ({:.2}s) see panic above", took.as_secs_f64())
            }
        };
        println!("criterion {n} [{name}]: {line}");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1

const VOCAB: &[&str] = &[
    "beam",
    "beams",
    "ris",
    "mimo",
    "cell-free",
    "isac",
    "thz",
    "mmwave",
    "6g",
    "o-ran",
    "ntn",
    "twin",
    "digital",
    "semantic",
    "quantum",
    "key",
    "graph",
    "lstm",
    "lstms",
    "drl",
    "ppo",
    "ai",
    "x",
    "-",
];
const SEPARATORS: &[&str] = &[
    " ", " ", " ", ", ", ". ", "; ", "/", "(", ") ", "\n", "-", "'s ", ": ", "  ",
];

fn random_case(rng: &mut StdRng, w: &str) -> String {
    match rng.random_range(0..4) {
        0 => w.to_ascii_uppercase(),
        1 => {
            let mut c = w.chars();
            c.next()
                .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
                .unwrap_or_default()
        }
        _ => w.to_string(),
    }
}

/// Lowercase ASCII tokens split at anything other than `[a-z0-9-]`.
fn oracle_tokens(s: &str) -> Vec<String> {
    s.to_ascii_lowercase()
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Gold keywords as token sequences, deduplicated in first-seen order.
fn oracle_gold(raw: &str) -> Vec<Vec<String>> {
    let raw = raw.trim();
    let raw = raw.strip_suffix('.').unwrap_or(raw);
    let mut out: Vec<Vec<String>> = Vec::new();
    for item in raw.split(',') {
        let toks = oracle_tokens(item);
        if !toks.is_empty() && !out.contains(&toks) {
            out.push(toks);
        }
    }
    out
}

/// Tries every token-boundary start position in the text.
fn oracle_hit(text: &[String], kw: &[String]) -> bool {
    (0..text.len()).any(|i| text.len() - i >= kw.len() && text[i..i + kw.len()] == *kw)
}

fn random_keyword(rng: &mut StdRng) -> String {
    let n = rng.random_range(1..=3);
    let words: Vec<String> = (0..n)
        .map(|_| {
            let w = VOCAB[rng.random_range(0..VOCAB.len() - 1)];
            random_case(rng, w)
        })
        .collect();
    words.join(if rng.random_bool(0.25) { "-" } else { " " })
}

fn random_text(rng: &mut StdRng, gold: &[String]) -> String {
    let target = rng.random_range(0..=500);
    let mut s = String::new();
    while s.len() < target {
        let piece = if !gold.is_empty() && rng.random_bool(0.3) {
            gold[rng.random_range(0..gold.len())].clone()
        } else {
            let w = VOCAB[rng.random_range(0..VOCAB.len())];
            random_case(rng, w)
        };
        s.push_str(&piece);
        s.push_str(SEPARATORS[rng.random_range(0..SEPARATORS.len())]);
    }
    s.truncate(500);
    s
}

fn naive_mcr(counts: &[(usize, usize)]) -> f64 {
    let mut sum = 0.0;
    for &(m, g) in counts {
        sum += m as f64 / g as f64;
    }
    100.0 * sum / counts.len() as f64
}

fn naive_grr(counts: &[(usize, usize)]) -> f64 {
    let (mut m, mut g) = (0usize, 0usize);
    for &(a, b) in counts {
        m += a;
        g += b;
    }
    100.0 * m as f64 / g as f64
}

fn naive_khc(counts: &[(usize, usize)]) -> f64 {
    counts.iter().map(|c| c.0).sum::<usize>() as f64 / counts.len() as f64
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn criterion_1() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x6d63_7231);
    let cases = 1200;
    let mut results = Vec::with_capacity(cases);
    let mut counts = Vec::with_capacity(cases);
    let mut hits = 0;
    for case in 0..cases {
        let n = rng.random_range(1..=10);
        let kws: Vec<String> = (0..n).map(|_| random_keyword(&mut rng)).collect();
        let mut raw = kws.join(", ");
        if rng.random_bool(0.5) {
            raw.push('.');
        }
        let text = random_text(&mut rng, &kws);

        let gold = parse_keywords(&raw);
        let expected_gold = oracle_gold(&raw);
        let got_gold: Vec<String> = gold.iter().map(str::to_string).collect();
        let want_gold: Vec<String> = expected_gold.iter().map(|t| t.join(" ")).collect();
        assert_eq!(
            got_gold, want_gold,
            "case {case}: gold parse differs for {raw:?}"
        );

        let r = match_keywords(&format!("q{case}"), &text, &gold).unwrap();
        let toks = oracle_tokens(&text);
        let want: Vec<String> = expected_gold
            .iter()
            .filter(|k| oracle_hit(&toks, k))
            .map(|k| k.join(" "))
            .collect();
        let got: Vec<String> = r.matched.iter().map(str::to_string).collect();
        assert_eq!(got, want, "case {case}: text {text:?} gold {raw:?}");
        assert_eq!(r.matched_count, want.len());
        assert_eq!(r.gold_size, expected_gold.len());
        hits += want.len();
        counts.push((want.len(), expected_gold.len()));
        results.push(r);
    }

    let mut batches = 0;
    let mut start = 0;
    while start < cases {
        let len = rng.random_range(1..=25).min(cases - start);
        let rs = &results[start..start + len];
        let cs = &counts[start..start + len];
        assert!(close(mcr::<f64>(rs).unwrap(), naive_mcr(cs)));
        assert!(close(grr::<f64>(rs).unwrap(), naive_grr(cs)));
        assert!(close(khc::<f64>(rs).unwrap(), naive_khc(cs)));
        start += len;
        batches += 1;
    }
    assert!(close(mcr::<f64>(&results).unwrap(), naive_mcr(&counts)));
    assert!(close(grr::<f64>(&results).unwrap(), naive_grr(&counts)));
    assert!(close(khc::<f64>(&results).unwrap(), naive_khc(&counts)));
    Verdict::Pass(format!(
        "{cases} cases, {hits} keyword hits, {batches} aggregate batches"
    ))
}

// ---------------------------------------------------------------- 2

fn synthetic_result(id: usize, matched: usize, gold: usize) -> MatchResult {
    MatchResult {
        question_id: format!("q{id}"),
        gold_size: gold,
        matched: (0..matched)
            .map(|i| format!("k{i}"))
            .collect::<KeywordSet>(),
        matched_count: matched,
    }
}

fn random_results(rng: &mut StdRng, fixed_gold: Option<usize>) -> Vec<MatchResult> {
    let n = rng.random_range(1..=40);
    (0..n)
        .map(|i| {
            let g = fixed_gold.unwrap_or_else(|| rng.random_range(1..=30));
            synthetic_result(i, rng.random_range(0..=g), g)
        })
        .collect()
}

fn criterion_2() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x6964_656e);
    let trials = 500;
    for _ in 0..trials {
        let g = rng.random_range(1..=30);
        let rs = random_results(&mut rng, Some(g));
        assert!(
            close(mcr::<f64>(&rs).unwrap(), grr::<f64>(&rs).unwrap()),
            "(a)"
        );

        let rs = random_results(&mut rng, None);
        let n = rs.len() as f64;
        let gold_total: usize = rs.iter().map(|r| r.gold_size).sum();
        let lhs = khc::<f64>(&rs).unwrap() * n;
        let rhs = grr::<f64>(&rs).unwrap() / 100.0 * gold_total as f64;
        assert!(close(lhs, rhs), "(b) {lhs} vs {rhs}");

        let mut shuffled = rs.clone();
        shuffled.shuffle(&mut rng);
        for (f, h) in [
            (mcr::<f64> as fn(&[MatchResult]) -> _, "mcr"),
            (grr::<f64>, "grr"),
            (khc::<f64>, "khc"),
        ] {
            assert!(close(f(&rs).unwrap(), f(&shuffled).unwrap()), "(c) {h}");
        }

        let open: Vec<usize> = (0..rs.len())
            .filter(|&i| rs[i].matched_count < rs[i].gold_size)
            .collect();
        if let Some(&i) = open.get(rng.random_range(0..open.len().max(1))) {
            let mut more = rs.clone();
            more[i] = synthetic_result(i, rs[i].matched_count + 1, rs[i].gold_size);
            assert!(
                mcr::<f64>(&more).unwrap() > mcr::<f64>(&rs).unwrap(),
                "(d) mcr"
            );
            assert!(
                grr::<f64>(&more).unwrap() > grr::<f64>(&rs).unwrap(),
                "(d) grr"
            );
            assert!(
                khc::<f64>(&more).unwrap() > khc::<f64>(&rs).unwrap(),
                "(d) khc"
            );
        }
    }
    Verdict::Pass(format!("{trials} trials of identities (a)-(d)"))
}

// ---------------------------------------------------------------- 3

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

fn one_question() -> QuestionRecord {
    let json = serde_json::json!({"question01": {
        "question": "Design an AI-driven resource allocator.",
        "Answer": "drl, ppo, lstm.",
        "Category": "Artificial Intelligence (AI)-Driven Network Optimization"
    }});
    parse_dataset(&json.to_string()).unwrap().remove(0)
}

fn criterion_3() -> Verdict {
    let q = one_question();
    let templates = TemplateLibrary::default();
    let names = ["d1", "d2"];

    let reg = hashing_registry(&names);
    let pipes = Pipelines::new(&reg, &templates);
    let base = pipes.run_baseline(&q, "d1").unwrap();
    assert_eq!(base.stage_log.len(), 1);

    let mut checked = 1;
    for m in 1..=2 {
        for n in 1..=3 {
            let cfg = DebateConfig::new(names[..m].iter().copied()).with_rounds(n, 1, 1);
            let out = pipes.run_regular_debate(&q, &cfg).unwrap();
            assert_eq!(out.stage_log.len(), n * m, "regular M={m} N={n}");
            for (t, e) in out.stage_log.iter().enumerate() {
                assert_eq!(e.backend, names[t % m], "rotation at call {}", t + 1);
                if t > 0 {
                    assert!(
                        e.prompt.contains(&out.stage_log[t - 1].response),
                        "chaining at call {}",
                        t + 1
                    );
                }
            }
            checked += 1;
        }
    }

    let plan = fixture("decomposition_round1.txt");
    let k = parse_subtasks(&plan).len();
    assert_eq!(k, 13);
    let mut reg = BackendRegistry::new();
    for name in names {
        let inner = hashing_backend(name);
        let plan = plan.clone();
        reg.register(Arc::new(ScriptedBackend::responder(name, move |p| {
            if is_decomp_prompt(p) {
                Ok(plan.clone())
            } else {
                inner.complete(p).map(|c| c.text).map_err(|e| e.to_string())
            }
        })))
        .unwrap();
    }
    let pipes = Pipelines::new(&reg, &templates);
    let mut hier = Vec::new();
    for (nd, ns) in [(1, 1), (2, 1), (1, 2)] {
        let cfg = DebateConfig::new(names).with_rounds(1, nd, ns);
        let out = pipes.run_hierarchical(&q, &cfg).unwrap();
        let expected = nd * 2 + k * ns * 2;
        assert_eq!(
            out.stage_log.len(),
            expected,
            "hierarchical Nd={nd} Ns={ns}"
        );
        hier.push(out.stage_log.len());
        checked += 1;
    }
    assert_eq!(hier[0], 28);
    Verdict::Pass(format!(
        "{checked} configurations; hierarchical k=13 M=2 -> {} calls",
        hier[0]
    ))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Verdict {
    let got: Vec<usize> = (1..=3)
        .map(|r| parse_subtasks(&fixture(&format!("decomposition_round{r}.txt"))).len())
        .collect();
    assert_eq!(got, [13, 20, 23]);
    Verdict::Pass(format!(
        "rounds 1/2/3 -> {}/{}/{} sub-tasks",
        got[0], got[1], got[2]
    ))
}

// ---------------------------------------------------------------- 5

fn solutions_bytes(out: &Path, run_id: &str) -> Vec<u8> {
    std::fs::read(out.join(run_id).join(SOLUTIONS_FILE)).unwrap()
}

fn criterion_5() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let ds = four_questions(tmp.path());
    let out = tmp.path().join("runs");
    let s = spec(
        &ds,
        PipelineKind::Hierarchical,
        DebateConfig::new(["a", "b"]),
    );

    let mut outputs = Vec::new();
    for w in [1, 4, 16] {
        let m = execute_run(
            &s,
            &hashing_registry(&["a", "b"]),
            &out,
            &RunOptions::with_workers(w),
        )
        .unwrap();
        outputs.push(solutions_bytes(&out, &m.run_id));
    }
    assert!(
        outputs.iter().all(|o| *o == outputs[0]),
        "worker counts disagree"
    );
    let oracle = outputs[0].clone();

    // record through the cache, then replay with no live backend at all
    let cache = tmp.path().join("cache");
    let mut rec = BackendRegistry::new();
    for n in ["a", "b"] {
        rec.register(plandebate::backend::record_replay(
            Arc::new(hashing_backend(n)),
            &cache,
        ))
        .unwrap();
    }
    let m = execute_run(&s, &rec, &out, &RunOptions::with_workers(16)).unwrap();
    assert_eq!(solutions_bytes(&out, &m.run_id), oracle);
    let mut replay = BackendRegistry::new();
    for n in ["a", "b"] {
        replay
            .register(Arc::new(ReplayBackend::replay_only(
                n,
                format!("scripted:{n}"),
                0.7,
                &cache,
            )))
            .unwrap();
    }
    let m = execute_run(&s, &replay, &out, &RunOptions::with_workers(4)).unwrap();
    assert_eq!(solutions_bytes(&out, &m.run_id), oracle);

    // interrupt mid-run, then resume with a different worker count
    let cancel = Arc::new(AtomicBool::new(false));
    let calls = Arc::new(std::sync::atomic::AtomicUsize::new(0));
    let mut reg = BackendRegistry::new();
    for n in ["a", "b"] {
        let inner = hashing_backend(n);
        let (cancel, calls) = (cancel.clone(), calls.clone());
        reg.register(Arc::new(ScriptedBackend::responder(n, move |p| {
            if calls.fetch_add(1, Ordering::SeqCst) + 1 >= 7 {
                cancel.store(true, Ordering::SeqCst);
            }
            inner.complete(p).map(|c| c.text).map_err(|e| e.to_string())
        })))
        .unwrap();
    }
    let opts = RunOptions {
        workers: 1,
        cancel: Some(cancel),
    };
    let RunError::Interrupted { run_id, remaining } =
        execute_run(&s, &reg, &out, &opts).unwrap_err()
    else {
        panic!("run was not interrupted")
    };
    assert_eq!(load_solutions(&out, &run_id).unwrap().len(), 4 - remaining);
    assert!(remaining > 0);
    resume_run(
        &out,
        &run_id,
        &hashing_registry(&["a", "b"]),
        &RunOptions::with_workers(16),
    )
    .unwrap();
    assert_eq!(solutions_bytes(&out, &run_id), oracle);

    Verdict::Pass(format!(
        "workers 1/4/16 identical, replay identical, resume after {} of 4 matches oracle",
        4 - remaining
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Verdict {
    let clock = Arc::new(MockClock::new());
    let mut reg = BackendRegistry::new();
    for n in ["a", "b"] {
        reg.register(Arc::new(
            ScriptedBackend::responder(n, |_| Ok("ok".into()))
                .with_pacing(Duration::from_secs(1), clock.clone()),
        ))
        .unwrap();
    }
    let starts = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for t in 0..16 {
            let (reg, starts) = (&reg, &starts);
            s.spawn(move || {
                for i in 0..5 {
                    let name = if (t + i) % 2 == 0 { "a" } else { "b" };
                    let c = reg.get(name).unwrap().complete("p").unwrap();
                    starts.lock().unwrap().push((name, c.started));
                }
            });
        }
    });
    let starts = starts.into_inner().unwrap();
    assert_eq!(starts.len(), 80);
    let mut min_gap = Duration::MAX;
    for n in ["a", "b"] {
        let mut ts: Vec<Duration> = starts.iter().filter(|s| s.0 == n).map(|s| s.1).collect();
        ts.sort();
        for w in ts.windows(2) {
            let gap = w[1] - w[0];
            assert!(gap >= Duration::from_secs(1), "backend {n}: gap {gap:?}");
            min_gap = min_gap.min(gap);
        }
    }
    let elapsed = clock.now();
    Verdict::Pass(format!(
        "80 calls over 2 backends, min gap {:.3}s, mock time {:.0}s",
        min_gap.as_secs_f64(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 7

fn raw_keyword_count(r: &QuestionRecord) -> usize {
    let raw = r.gold_raw.trim();
    let raw = raw.strip_suffix('.').unwrap_or(raw);
    raw.split(',').filter(|s| !s.trim().is_empty()).count()
}

fn check_published_shape(records: &[QuestionRecord]) -> Result<String, String> {
    if records.len() != 110 {
        return Err(format!("{} questions, expected 110", records.len()));
    }
    let cats: std::collections::BTreeSet<&str> =
        records.iter().map(|r| r.category.as_str()).collect();
    if cats.len() != 11 {
        return Err(format!("{} categories, expected 11", cats.len()));
    }
    if let Some(r) = records.iter().find(|r| r.gold.is_empty()) {
        return Err(format!("{} has an empty gold set", r.id));
    }
    let raw: usize = records.iter().map(raw_keyword_count).sum();
    if !(4000..=6000).contains(&raw) {
        return Err(format!("{raw} raw keywords, expected 4000..=6000"));
    }
    Ok(format!("110 questions, 11 categories, {raw} raw keywords"))
}

fn published_dataset() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("PLANDEBATE_6GPLAN") {
        return Some(PathBuf::from(p));
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    [
        "data/6GPlan.json",
        "data/6GPlan_Dataset.json",
        "data/6gplan.json",
    ]
    .iter()
    .map(|p| root.join(p))
    .find(|p| p.exists())
}

fn criterion_7() -> Verdict {
    // The checker itself must accept a conforming file and reject broken ones.
    let tmp = tempfile::tempdir().unwrap();
    let mut entries = Vec::new();
    for i in 0..110 {
        let kws: Vec<String> = (0..45).map(|j| format!("term{i}x{j}")).collect();
        entries.push((
            format!("question{:02}", i + 1),
            format!("Question number {i}?"),
            golden::CATEGORIES[i % 11].to_string(),
            kws.join(", ") + ".",
        ));
    }
    let refs: Vec<(&str, &str, &str, &str)> = entries
        .iter()
        .map(|(a, b, c, d)| (a.as_str(), b.as_str(), c.as_str(), d.as_str()))
        .collect();
    let synthetic = load_dataset(write_dataset(tmp.path(), &refs)).unwrap();
    check_published_shape(&synthetic).unwrap();
    assert!(check_published_shape(&synthetic[..109]).is_err());

    match published_dataset() {
        Some(path) => {
            let records = load_dataset(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            Verdict::Pass(check_published_shape(&records).unwrap_or_else(|e| panic!("{e}")))
        }
        None => Verdict::Blocked(
            "published dataset file not available offline; set PLANDEBATE_6GPLAN=<path> \
             (checker verified on a synthetic 110x11 fixture)"
                .into(),
        ),
    }
}

// ---------------------------------------------------------------- 8

const PLAN: &str = "1. Part one\n2. Part two\n3. Part three";
const PARTS: [&str; 3] = ["Part one", "Part two", "Part three"];

fn gold_of(q: usize, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("q{q}kw{i:02}")).collect()
}

/// Debater 1 names two keywords of whatever it is asked about; debater 2
/// repeats those and adds the next two. The plan splits a question's
/// keywords into consecutive blocks of four, one per part.
fn ordering_backend(name: &'static str) -> ScriptedBackend {
    let golds = [gold_of(1, 12), gold_of(2, 16)];
    ScriptedBackend::responder(name, move |p| {
        if is_decomp_prompt(p) {
            return Ok(PLAN.to_string());
        }
        let q = if p.contains("QALPHA") {
            0
        } else if p.contains("QBETA") {
            1
        } else {
            return Err(format!("unknown question in {p:?}"));
        };
        let offset = PARTS
            .iter()
            .position(|part| p.contains(&format!("sub-task: {part}")))
            .map_or(0, |i| 4 * i);
        let take = if name == "a" { 2 } else { 4 };
        Ok(golds[q][offset..offset + take].join(", "))
    })
}

fn criterion_8() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let g1 = gold_of(1, 12).join(", ");
    let g2 = gold_of(2, 16).join(", ");
    let ds = write_dataset(
        tmp.path(),
        &[
            (
                "question01",
                "Plan the QALPHA rollout.",
                "Cell-Free Massive MIMO",
                &g1,
            ),
            (
                "question02",
                "Plan the QBETA rollout.",
                "Semantic Communications",
                &g2,
            ),
        ],
    );
    let dataset = load_dataset(&ds).unwrap();
    let out = tmp.path().join("runs");
    let mut reg = BackendRegistry::new();
    reg.register(Arc::new(ordering_backend("a"))).unwrap();
    reg.register(Arc::new(ordering_backend("b"))).unwrap();

    let rat = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    // baseline: (2/12 + 2/16)/2; regular: (4/12 + 4/16)/2; hierarchical: (12/12 + 12/16)/2
    let expected = [
        (PipelineKind::Baseline, rat(175, 12)),
        (PipelineKind::Regular, rat(175, 6)),
        (PipelineKind::Hierarchical, rat(175, 2)),
    ];
    let mut seen = Vec::new();
    for (kind, want) in &expected {
        let m = execute_run(
            &spec(&ds, *kind, DebateConfig::new(["a", "b"])),
            &reg,
            &out,
            &RunOptions::default(),
        )
        .unwrap();
        let report = score_run(&out, &m.run_id, &dataset).unwrap();
        let sols = load_solutions(&out, &m.run_id).unwrap();
        let results: Vec<MatchResult> = dataset
            .iter()
            .map(|q| match_keywords(&q.id, &sols[&q.id], &q.gold).unwrap())
            .collect();
        let exact = ExactMetrics::from_results(&results, &dataset).unwrap();
        assert_eq!(&exact.mcr_percent, want, "{kind} exact MCR");
        let want_f = num_traits::ToPrimitive::to_f64(want).unwrap();
        assert!(
            close(report.metrics.mcr_percent, want_f),
            "{kind}: {}",
            report.metrics.mcr_percent
        );
        seen.push(report.metrics.mcr_percent);
    }
    assert!(seen[2] > seen[1] && seen[1] > seen[0]);
    Verdict::Pass(format!(
        "MCR hierarchical {:.3} > regular {:.3} > baseline {:.3}",
        seen[2], seen[1], seen[0]
    ))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Verdict {
    let rows = golden::table_rows();
    let csv = render_table(&rows).unwrap();
    assert!(csv.starts_with("pipeline,models,MCR,KHC,GRR\n"));
    assert!(csv.ends_with('\n'));
    let line = csv
        .lines()
        .find(|l| l.starts_with("Hierarchical,"))
        .unwrap();
    assert_eq!(line, "Hierarchical,A+B,81.19,75.41,81.09");
    assert!(line.ends_with("81.19,75.41,81.09"));

    let (cats, series) = golden::radar_input();
    let svg = render_radar(&cats, &series).unwrap();
    assert_eq!(svg, render_radar(&cats, &series).unwrap());
    let golden_svg = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/radar.svg"),
    )
    .unwrap();
    assert_eq!(svg, golden_svg, "radar drifted from golden file");
    let doc = roxmltree::Document::parse(&svg).unwrap();
    for poly in doc.descendants().filter(|n| n.has_tag_name("polygon")) {
        assert_eq!(
            poly.attribute("points").unwrap().split(' ').count(),
            cats.len()
        );
    }
    Verdict::Pass(format!(
        "row `{line}`, radar {} bytes matches golden",
        svg.len()
    ))
}
