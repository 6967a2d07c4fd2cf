//! End-to-end runs of the `smooth-stl` binary.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smooth-stl"))
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const PREDS: &str = r#"{
    "high": {"c": [1.0, 0.0], "b": -1.0},
    "low":  {"c": [-1.0, 0.0], "b": 3.0}
}"#;

const SIGNAL: &str = "t,s0,s1\n0,2.0,0.0\n1,2.5,0.0\n2,1.5,0.0\n3,2.2,0.0\n";

const PROBLEM: &str = r#"{
    "system": {"type": "single_integrator_2d", "dt": 1.0},
    "x0": [0.0, 0.0],
    "T": 8,
    "formula": "F[0,8] goal",
    "predicates": {
        "goal": {"type": "affine", "c": [1, 1, 0, 0, 0, 0], "b": -2.0}
    },
    "smooth": {"srm": "SRM3", "k1": 3.0, "k2": 3.0}
}"#;

#[test]
fn eval_prints_values_and_certified_range() {
    let dir = tempfile::tempdir().unwrap();
    let preds = write(dir.path(), "preds.json", PREDS);
    let signal = write(dir.path(), "sig.csv", SIGNAL);
    let out = run_ok(bin().args([
        "eval",
        "--formula",
        "G[0,3] (high & low)",
        "--predicates",
        &preds,
        "--signal",
        &signal,
        "--srm",
        "SRM2",
    ]));
    // min over time of min(s0 - 1, 3 - s0) = 0.5 at t = 2
    assert!(out.contains("exact rho:    0.5"), "{out}");
    assert!(out.contains("SRM2"), "{out}");
    assert!(out.contains("certified:"), "{out}");
}

#[test]
fn eval_reads_formula_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let preds = write(dir.path(), "preds.json", PREDS);
    let signal = write(dir.path(), "sig.csv", SIGNAL);
    let formula = write(dir.path(), "spec.stl", "F[0,3] high\n");
    let out = run_ok(bin().args(["eval", "--formula", &formula, "--predicates", &preds, "--signal", &signal]));
    assert!(out.contains("exact rho:    1.5"), "{out}");
}

#[test]
fn bounds_requires_range_for_soft_operators() {
    let dir = tempfile::tempdir().unwrap();
    let preds = write(dir.path(), "preds.json", PREDS);
    let args = ["bounds", "--formula", "G[0,3] high", "--predicates", &preds];

    let out = run_ok(bin().args(args).args(["--srm", "SRM1", "--k1", "2", "--k2", "2"]));
    // quasi band over a 4-sample window: ln(4) / 2
    assert!(out.contains(&format!("width:             {}", 4.0f64.ln() / 2.0)), "{out}");

    let missing = bin().args(args).args(["--srm", "SRM3"]).output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--range-bound"));

    run_ok(bin().args(args).args(["--srm", "SRM3", "--range-bound", "10"]));
}

#[test]
fn synth_writes_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "prob.json", PROBLEM);
    let out_dir = dir.path().join("run");
    let out = run_ok(bin().args([
        "synth",
        "--problem",
        &problem,
        "--max-iters",
        "150",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    assert!(out.contains("exact rho:"), "{out}");
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("result.json")).unwrap())
            .unwrap();
    assert!(result["exact_value"].as_f64().unwrap() > 0.0, "{result}");
    let trajectory = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert_eq!(trajectory.lines().count(), 10); // header + T + 1 samples
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,smooth,exact,L,U,grad_norm\n"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn synth_switching_reports_gap() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "prob.json", PROBLEM);
    let out = run_ok(bin().args([
        "synth",
        "--problem",
        &problem,
        "--max-iters",
        "60",
        "--switch-period",
        "15",
        "--out",
        dir.path().join("sw").to_str().unwrap(),
    ]));
    assert!(out.contains("switching gap:"), "{out}");
}

#[test]
fn synth_warm_start_reports_stages() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "prob.json", PROBLEM);
    let out = run_ok(bin().args([
        "synth",
        "--problem",
        &problem,
        "--max-iters",
        "60",
        "--warm-start",
        "--out",
        dir.path().join("ws").to_str().unwrap(),
    ]));
    assert!(out.contains("stage 0:"), "{out}");
    assert!(out.contains("stage 1:"), "{out}");
}

#[test]
fn bench_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bench");
    run_ok(bin().args([
        "bench",
        "--scp",
        "1",
        "--srm",
        "SRM3",
        "--k",
        "3",
        "--realizations",
        "2",
        "--max-iters",
        "10",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 3);
    assert!(out_dir.join("aggregate.csv").is_file());
    assert!(out_dir.join("timings.csv").is_file());
}

#[test]
fn grad_check_reports_small_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "prob.json", PROBLEM);
    let out = run_ok(bin().args(["grad-check", "--problem", &problem, "--trials", "3"]));
    let err: f64 = out
        .lines()
        .find(|l| l.starts_with("max relative error:"))
        .unwrap()
        .split_whitespace()
        .last()
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-5, "{out}");
}
