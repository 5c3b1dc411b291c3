//! End-to-end runs of the `filtervec` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_filtervec"))
}

fn ok(out: &Output) -> bool {
    out.status.success()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

#[test]
fn estimate_mem_prints_worked_example() {
    let out = bin()
        .args([
            "estimate-mem",
            "--n", "100000000",
            "--dim", "128",
            "--f", "3.17",
            "--f-hs", "3.0",
            "--f-ls", "0.17",
            "--bytes", "4",
            "--graph-degree", "16",
            "--single-degree", "64",
            "--n-labels", "200000",
        ])
        .output()
        .unwrap();
    assert!(ok(&out), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    for needle in ["65.57", "8.11", "73.67", "71.53", "1.18"] {
        assert!(text.contains(needle), "missing {needle} in:\n{text}");
    }
}

#[test]
fn bench_with_missing_ground_truth_fails_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.fvecs");
    let ql = dir.path().join("q.txt");
    std::fs::write(&ql, "1\n").unwrap();
    // Minimal 1-record fvecs file.
    let mut bytes = 4i32.to_le_bytes().to_vec();
    for v in [0f32; 4] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(&q, bytes).unwrap();

    let missing = dir.path().join("missing-gt.ivecs");
    let out = bin()
        .args([
            "bench",
            "--index", "also-missing.fvi",
            "--queries", q.to_str().unwrap(),
            "--query-labels", ql.to_str().unwrap(),
            "--gt", missing.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!ok(&out));
    assert!(
        stderr(&out).contains("missing-gt.ivecs"),
        "diagnostic should name the path: {}",
        stderr(&out)
    );
}

#[test]
fn unknown_flag_exits_nonzero() {
    let out = bin().args(["search", "--no-such-flag"]).output().unwrap();
    assert!(!ok(&out));
}

#[test]
fn full_pipeline_reaches_high_recall() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let s = |p: &Path| p.to_str().unwrap().to_string();

    let base = p("base.fvecs");
    let labels = p("labels.txt");
    let queries = p("q.fvecs");
    let qlabels = p("q.txt");
    let index = p("idx.fvi");
    let gt = p("gt.ivecs");
    let report = p("report.csv");
    let results_a = p("res_a.txt");
    let results_b = p("res_b.txt");

    let run = |args: &[&str]| {
        let out = bin().args(args).output().unwrap();
        assert!(ok(&out), "command {args:?} failed: {}", stderr(&out));
        out
    };

    run(&["gen-vectors", "--n", "12000", "--dim", "16", "--seed", "1", "--clusters", "10", "--out", &s(&base)]);
    run(&["gen-labels", "--n-points", "12000", "--n-labels", "16", "--f-target", "2.5", "--seed", "2", "--out", &s(&labels)]);
    run(&["build", "--data", &s(&base), "--labels", &s(&labels), "--index", &s(&index), "--T", "600", "--R", "12"]);
    run(&["gen-vectors", "--n", "64", "--dim", "16", "--seed", "3", "--clusters", "10", "--out", &s(&queries)]);

    // Query labels: cycle over the label universe.
    let mut lines = String::new();
    for i in 0..64 {
        lines.push_str(&format!("{}\n", i % 16));
    }
    std::fs::write(&qlabels, lines).unwrap();

    run(&["ground-truth", "--data", &s(&base), "--labels", &s(&labels), "--queries", &s(&queries), "--query-labels", &s(&qlabels), "--k", "10", "--out", &s(&gt)]);
    run(&["bench", "--index", &s(&index), "--queries", &s(&queries), "--query-labels", &s(&qlabels), "--gt", &s(&gt), "--itopk", "32,64,128", "--k", "10", "--reps", "3", "--out", &s(&report)]);

    let csv = std::fs::read_to_string(&report).unwrap();
    let best_recall: f64 = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(best_recall >= 0.9, "no grid point reached recall 0.9:\n{csv}");

    // Same search twice: byte-identical result files.
    run(&["search", "--index", &s(&index), "--queries", &s(&queries), "--query-labels", &s(&qlabels), "--k", "5", "--itopk", "32", "--seed", "9", "--out", &s(&results_a)]);
    run(&["search", "--index", &s(&index), "--queries", &s(&queries), "--query-labels", &s(&qlabels), "--k", "5", "--itopk", "32", "--seed", "9", "--out", &s(&results_b)]);
    assert_eq!(
        std::fs::read(&results_a).unwrap(),
        std::fs::read(&results_b).unwrap()
    );

    // Streaming bench mode also runs.
    run(&["bench", "--index", &s(&index), "--queries", &s(&queries), "--query-labels", &s(&qlabels), "--gt", &s(&gt), "--itopk", "32", "--k", "10", "--reps", "1", "--streaming", "--workers", "2"]);

    // Mode validation: the file is single-label, asking for AND fails.
    let out = bin()
        .args(["search", "--index", &s(&index), "--queries", &s(&queries), "--query-labels", &s(&qlabels), "--mode", "and"])
        .output()
        .unwrap();
    assert!(!ok(&out));
}
