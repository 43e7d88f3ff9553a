//! End-to-end runs of the `mmot` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mmot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = mmot(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn gen(dir: &Path, family: &str, np: usize, seed: u64) -> String {
    let path = dir.join(format!("{family}_{seed}.csv"));
    let path = path.to_str().unwrap().to_owned();
    ok(&["gen", "--family", family, "--np", &np.to_string(), "--seed", &seed.to_string(), "--out", &path]);
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "ring", 1000, 7);
    let first = fs::read(&a).unwrap();
    let b = dir.path().join("again.csv");
    ok(&["gen", "--family", "ring", "--np", "1000", "--seed", "7", "--out", b.to_str().unwrap()]);
    assert_eq!(first, fs::read(&b).unwrap());

    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1000);
    assert!(text.lines().all(|l| l.split(',').count() == 2));
}

#[test]
fn gen_unknown_family_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = mmot(&["gen", "--family", "spiral", "--np", "10", "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("spiral"));
}

#[test]
fn solve_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "normal", 300, 1);
    let report = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    ok(&["solve", &a, &a, "--report", report.to_str().unwrap(), "--trace", trace.to_str().unwrap(), "--init", "random-shuffle"]);

    let r = json(&report);
    assert_eq!(r["converged"], true);
    assert_eq!(r["k"], 2);
    assert_eq!(r["np"], 300);
    for key in ["schema_version", "method", "seed", "n", "p", "mean_cost", "sweeps", "wall_ms", "alpha_hat", "r_squared"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }

    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sweep,mean_cost,accepted,cumulative_candidates,wall_ms");
    let costs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(costs.last().unwrap() <= &costs[0]);
    assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].max(1.0)));
}

#[test]
fn solve_is_deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "banana", 200, 2);
    let b = gen(dir.path(), "funnel", 200, 3);
    let mut reports = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("r{run}.json"));
        ok(&["solve", &a, &b, "--seed", "42", "--init", "random-shuffle", "--report", path.to_str().unwrap()]);
        let mut r = json(&path);
        r.as_object_mut().unwrap().remove("wall_ms");
        reports.push(r);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn solve_five_marginals_exports_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let inputs: Vec<String> = ["normal", "swiss_roll", "banana", "funnel", "ring"]
        .iter()
        .enumerate()
        .map(|(i, f)| gen(dir.path(), f, 2000, i as u64))
        .collect();
    let pairs = dir.path().join("pairs.csv");
    let trace = dir.path().join("trace.csv");
    let report = dir.path().join("r.json");
    let mut args: Vec<&str> = vec!["solve"];
    args.extend(inputs.iter().map(String::as_str));
    args.extend(["--weight", "0.5", "--pairs", pairs.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    args.extend(["--report", report.to_str().unwrap()]);
    ok(&args);

    let text = fs::read_to_string(&pairs).unwrap();
    assert_eq!(text.lines().count(), 2000);
    assert!(text.lines().all(|l| l.split(',').count() == 10));
    let costs: Vec<f64> = fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].max(1.0)));
}

#[test]
fn solve_rejects_mismatched_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "normal", 10, 0);
    let b = gen(dir.path(), "normal", 11, 1);
    let out = mmot(&["solve", &a, &b]);
    assert!(!out.status.success());
}

#[test]
fn compare_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "normal", 64, 0);
    let b = gen(dir.path(), "uniform", 64, 1);
    let out = ok(&["compare", &a, &b, "--methods", "collision,isa,hungarian,sinkhorn"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["reference"], "hungarian");
    assert_eq!(v["results"].as_array().unwrap().len(), 4);
}

#[test]
fn bench_reports_scaling_and_memory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    ok(&["bench", "--sizes", "200,400", "--sweeps", "3", "--repeats", "3", "--memory-np", "10000", "--out", out.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["scaling"].as_array().unwrap().len(), 2);
    assert_eq!(v["ratios"].as_array().unwrap().len(), 1);
    assert_eq!(v["memory"]["within_bound"], true);
}

#[test]
fn bench_without_scenario_is_usage_error() {
    let out = mmot(&["bench"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}
