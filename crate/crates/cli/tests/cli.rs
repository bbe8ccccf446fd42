use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn krpool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krpool")).args(args).env_remove("KRP_JOBS").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, per_class: usize, n: usize, seed: u64) -> PathBuf {
    let out = krpool(&[
        "synth", "--classes", "order", "--per-class", &per_class.to_string(), "--n", &n.to_string(), "--d", "5", "--seed",
        &seed.to_string(), "--out", s(dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let printed = String::from_utf8(out.stdout).unwrap();
    PathBuf::from(printed.trim())
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(ext))
        .collect();
    v.sort();
    v
}

#[test]
fn synth_writes_requested_count_deterministically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let manifest = synth(a.path(), 50, 40, 7);
    synth(b.path(), 50, 40, 7);
    assert_eq!(manifest, a.path().join("manifest.jsonl"));
    let files = files_with_ext(a.path(), "seqf");
    assert_eq!(files.len(), 100);
    assert_eq!(std::fs::read_to_string(&manifest).unwrap().lines().count(), 100);
    for f in &files {
        let twin = b.path().join(f.file_name().unwrap());
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(twin).unwrap());
    }
}

#[test]
fn synth_rejects_single_sequence_per_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = krpool(&["synth", "--per-class", "1", "--out", s(dir.path())]);
    assert_eq!(code(&out), 1);
}

#[test]
fn pool_average_has_no_violation_rate() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 5, 20, 1);
    let out_dir = dir.path().join("pooled");
    let out = krpool(&["pool", "--manifest", s(&manifest), "--out", s(&out_dir), "--scheme", "avg"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files_with_ext(&out_dir, "seqd").len(), 10);
    let report = read_json(out_dir.join("pool_report.json"));
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 10);
    for e in entries {
        assert!(e.get("violation_rate").is_none());
        assert_eq!(e["ok"], Value::Bool(true));
    }
    assert_eq!(report["config"]["scheme"], "avg");
}

#[test]
fn pool_krpfs_is_feasible_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 6, 30, 2);
    let run = |name: &str, jobs: &str| {
        let out_dir = dir.path().join(name);
        let out = krpool(&["pool", "--manifest", s(&manifest), "--out", s(&out_dir), "--p", "3", "--jobs", jobs]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let first = run("a", "1");
    let second = run("b", "3");
    let report = read_json(first.join("pool_report.json"));
    for e in report["entries"].as_array().unwrap() {
        assert!(e["feasibility"].as_f64().unwrap() < 1e-8);
        let rate = e["violation_rate"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
    let (fa, fb) = (files_with_ext(&first, "seqd"), files_with_ext(&second, "seqd"));
    assert_eq!(fa.len(), 12);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    let csv = std::fs::read_to_string(first.join("pool_summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn gradcheck_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = krpool(&["gradcheck", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(dir.path().join("gradcheck.json"));
    assert_eq!(report["instances"].as_array().unwrap().len(), 20);
    assert!(report["max_rel_error"].as_f64().unwrap() < 1e-5);
    assert_eq!(report["passed"], Value::Bool(true));

    assert_eq!(code(&krpool(&["gradcheck", "--tol", "1e-12"])), 2);
    assert_eq!(code(&krpool(&["gradcheck", "--instances", "0"])), 1);
    assert_eq!(code(&krpool(&["gradcheck", "--scheme", "avg"])), 1);
}

#[test]
fn classify_full_fraction_matches_dense() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 8, 30, 3);
    let pooled = dir.path().join("pooled");
    assert_eq!(code(&krpool(&["pool", "--manifest", s(&manifest), "--out", s(&pooled), "--p", "3"])), 0);
    let descriptors = pooled.join("descriptors.jsonl");
    let dense = dir.path().join("dense");
    let full = dir.path().join("full");
    assert_eq!(code(&krpool(&["classify", "--descriptors", s(&descriptors), "--p", "3", "--out", s(&dense)])), 0);
    let out = krpool(&[
        "classify", "--descriptors", s(&descriptors), "--p", "3", "--nystrom-fraction", "1.0", "--out", s(&full),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (d, f) = (read_json(dense.join("metrics.json")), read_json(full.join("metrics.json")));
    for key in ["split_accuracy", "mean_accuracy", "confusion", "per_class_accuracy"] {
        assert_eq!(d["metrics"][key], f["metrics"][key], "{key}");
    }
    assert_eq!(std::fs::read(dense.join("metrics.csv")).unwrap(), std::fs::read(full.join("metrics.csv")).unwrap());

    // Pooling on the fly gives the same numbers as the stored descriptors.
    let fly = dir.path().join("fly");
    assert_eq!(code(&krpool(&["classify", "--manifest", s(&manifest), "--p", "3", "--out", s(&fly)])), 0);
    assert_eq!(read_json(fly.join("metrics.json"))["metrics"]["split_accuracy"], d["metrics"]["split_accuracy"]);
}

#[test]
fn classify_needs_two_splits() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), 3, 12, 4);
    let text = std::fs::read_to_string(&manifest).unwrap().replace("\"split\":2", "\"split\":1");
    let single = dir.path().join("single.jsonl");
    std::fs::write(&single, text).unwrap();
    let out = krpool(&["classify", "--manifest", s(&single), "--scheme", "avg"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn nystrom_eval_reports_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 6, 20, 5);
    let out_dir = dir.path().join("ny");
    let out = krpool(&[
        "nystrom-eval", "--manifest", s(&manifest), "--scheme", "ibkrp", "--fractions", "0.5,1", "--out", s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(out_dir.join("nystrom.json"));
    let fractions = report["fractions"].as_array().unwrap();
    assert_eq!(fractions.len(), 2);
    assert_eq!(fractions[1]["delta_points"].as_f64().unwrap(), 0.0);
    let csv = std::fs::read_to_string(out_dir.join("nystrom.csv")).unwrap();
    assert!(csv.starts_with("fraction,mean_accuracy,delta_points,gram_seconds\n"));
}

#[test]
fn bench_csv_and_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = krpool(&["bench", "--sizes", "20,40", "--iters", "2", "--repeats", "2", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let rows = krpool_cli::commands::bench::parse_csv(&csv).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![20, 40]);
    assert!(read_json(dir.path().join("bench.json"))["slope"].is_f64());

    let single = dir.path().join("single");
    assert_eq!(code(&krpool(&["bench", "--sizes", "30", "--iters", "1", "--repeats", "1", "--out", s(&single)])), 0);
    assert!(read_json(single.join("bench.json")).get("slope").is_none());
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 3, 12, 6);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# order benchmark\nscheme = rp\nlambda = 2.5\nsigma = median\n").unwrap();
    let out_dir = dir.path().join("pooled");
    let out = krpool(&[
        "pool", "--config", s(&cfg), "--lambda", "0.5", "--manifest", s(&manifest), "--out", s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(out_dir.join("pool_report.json"));
    assert_eq!(report["config"]["scheme"], "rp");
    assert_eq!(report["config"]["lambda"].as_f64(), Some(0.5));

    std::fs::write(&cfg, "temperature = 3\n").unwrap();
    assert_eq!(code(&krpool(&["gradcheck", "--config", s(&cfg)])), 1);
    assert_eq!(code(&krpool(&["gradcheck", "--lambda", "-1"])), 1);
    assert_eq!(code(&krpool(&["no-such-command"])), 1);
    assert_eq!(code(&krpool(&["--help"])), 0);
}
