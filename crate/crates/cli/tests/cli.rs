use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn gensol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gensol")).args(args).output().unwrap()
}

fn error_json(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line on stderr");
    serde_json::from_str(line).unwrap()
}

fn small(name: &str, nx: u64) -> Value {
    let mut cfg = scenario(name);
    cfg["numerics"]["Nx"] = nx.into();
    cfg
}

#[test]
fn solve_writes_fields_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "adv.json", &small("linear_advection.json", 80));
    let out = dir.path().join("out");
    let res = gensol(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["U1.csv", "U2.csv", "V.csv", "report.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let u2 = std::fs::read_to_string(out.join("U2.csv")).unwrap();
    assert_eq!(u2.lines().next(), Some("x,t,U2"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["sup_achieved"].as_f64().unwrap() <= report["apriori_bound"].as_f64().unwrap());
}

#[test]
fn solve_with_derivative_writes_gradients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "nl.json", &small("nonlinear_smooth.json", 60));
    let out = dir.path().join("out");
    let res = gensol(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("dU1_dx.csv").is_file());
}

#[test]
fn invalid_k_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = scenario("linear_advection.json");
    cfg["problem"]["k"] = 0.into();
    let cfg = write_config(dir.path(), "k0.json", &cfg);
    let res = gensol(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = error_json(&res);
    assert_eq!(err["code"], "config");
    assert!(err["message"].as_str().unwrap().contains("1 <= k <= n"), "{err}");
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = scenario("linear_advection.json");
    cfg["numerics"]["bogus"] = 1.into();
    let cfg = write_config(dir.path(), "bad.json", &cfg);
    let res = gensol(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(error_json(&res)["code"], "config");
}

#[test]
fn missing_config_file_is_reported() {
    let res = gensol(&["solve", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(error_json(&res)["code"], "io");
}

#[test]
fn usage_errors_exit_two() {
    let res = gensol(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(error_json(&res)["code"], "usage");
    let res = gensol(&["mollifier", "--q", "two", "--radius", "1", "--emit", "x.csv"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(gensol(&["--help"]).status.code(), Some(0));
}

#[test]
fn mollifier_emits_samples_and_moments() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("phi.csv");
    let res = gensol(&["mollifier", "--q", "3", "--radius", "0.5", "--emit", csv.to_str().unwrap(), "--points", "21"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 22);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("phi.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);

    let res = gensol(&["mollifier", "--q", "2", "--radius", "-1", "--emit", csv.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn trace_reaches_an_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/cavity_echo.json");
    let out = dir.path().join("t");
    let res = gensol(&[
        "trace", "--config", cfg.to_str().unwrap(), "--component", "2", "--x", "0.5", "--t", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("1.0,0.5"));

    let res = gensol(&["trace", "--config", cfg.to_str().unwrap(), "--component", "3", "--x", "0.5", "--t", "1"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn verify_passes_on_a_sound_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "react.json", &small("exponential_reaction.json", 60));
    let out = dir.path().join("v");
    let res = gensol(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn verify_exits_one_when_a_check_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("delta_sweep.json", 256);
    cfg["numerics"]["picard"] = serde_json::json!({ "tol": 1e-14, "max_iter": 1 });
    cfg["problem"]["F"] = serde_json::json!({ "builtin": "linear", "c": 1.0 });
    let cfg = write_config(dir.path(), "bad.json", &cfg);
    let out = dir.path().join("v");
    let res = gensol(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_json(&res)["code"], "estimate_failed");
    assert!(out.join("verify.csv").is_file());
}

#[test]
fn domain_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("exponential_reaction.json", 50);
    cfg["numerics"]["picard"] = serde_json::json!({ "tol": 1e-14, "max_iter": 1 });
    let cfg = write_config(dir.path(), "bad.json", &cfg);
    let res = gensol(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_json(&res)["code"], "no_convergence");
}

#[test]
fn sweep_and_classify_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("delta_sweep.json", 512);
    cfg["regularization"]["eps_grid"]["count"] = 4.into();
    cfg["regularization"]["eps_grid"]["stop"] = 0.015625.into();
    let cfg = write_config(dir.path(), "sweep.json", &cfg);
    let run = |sub: &str, tag: &str, threads: &str| {
        let out = dir.path().join(format!("{sub}-{tag}"));
        let res = gensol(&[
            "--threads", threads, sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        out
    };
    let a = run("sweep", "a", "1");
    let b = run("sweep", "b", "2");
    for f in ["sweep.csv", "sweep.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }

    let classify = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/loglog_classify.json");
    let out = dir.path().join("cls");
    let res = gensol(&["classify", "--config", classify.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let c: Value = serde_json::from_str(&std::fs::read_to_string(out.join("classify.json")).unwrap()).unwrap();
    assert_eq!(c["verdict"]["class"], "loglog");
}

#[test]
fn sweep_requires_an_epsilon_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "adv.json", &small("linear_advection.json", 40));
    let res = gensol(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}
