use std::path::PathBuf;

use gensol_core::scenario::{bump, loglog_example, loglog_example_dy, ScenarioConfig};
use gensol_core::Error;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> ScenarioConfig {
    let text = std::fs::read_to_string(scenario_dir().join(name)).unwrap();
    ScenarioConfig::from_json(&text).unwrap()
}

fn minimal(problem_extra: &str) -> String {
    format!(
        r#"{{"schema_version": 1, "problem": {{"n": 2, "k": 1, "l": 1.0, "T": 1.0,
            "lambda": {{"builtin": "unit"}}, "A": [{{"kind": "zero"}}, {{"kind": "zero"}}] {problem_extra} }} }}"#
    )
}

#[test]
fn shipped_scenarios_load_and_round_trip() {
    let mut count = 0;
    for entry in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = ScenarioConfig::from_json(&text).unwrap_or_else(|e| panic!("{path:?}: {e}"));
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back, "{path:?}");
        count += 1;
    }
    assert!(count >= 4);
}

#[test]
fn k_zero_is_a_config_error_citing_the_constraint() {
    let text = minimal("").replace("\"k\": 1", "\"k\": 0");
    let err = ScenarioConfig::from_json(&text).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("1 <= k <= n"), "{err}");
}

#[test]
fn schema_violations_are_config_errors() {
    let bad = [
        minimal(", \"F\": {\"builtin\": \"cubic\"}"),
        minimal(", \"F\": {\"builtin\": \"linear\", \"c\": 1.0, \"d\": 2.0}"),
        minimal(", \"extra\": 1"),
        minimal(", \"F\": \"U3\""),
        minimal(", \"F\": [\"U1\"]"),
        minimal(", \"H\": 3"),
        minimal("").replace("\"schema_version\": 1", "\"schema_version\": 2"),
        minimal("").replace("\"T\": 1.0", "\"T\": -1.0"),
        minimal("").replace("[{\"kind\": \"zero\"}, ", "["),
    ];
    for text in bad {
        let err = ScenarioConfig::from_json(&text).unwrap_err();
        assert!(err.is_config(), "{text}: {err}");
    }
    let err = ScenarioConfig::from_json(&minimal(", \"F\": \"y\"")).unwrap_err();
    assert!(matches!(err, Error::Expr(_)));
    assert!(err.to_string().contains("U1..U2"), "{err}");
}

#[test]
fn expressions_match_builtins() {
    let a = ScenarioConfig::from_json(&minimal(
        r#", "F": {"builtin": "sine", "c": 0.5}, "H": {"builtin": "cross_reflection", "gain": 0.5}"#,
    ))
    .unwrap()
    .spec()
    .unwrap();
    let b = ScenarioConfig::from_json(&minimal(r#", "F": "0.5*sin(U1)*(2-i) + 0.5*sin(U2)*(i-1)", "H": ["0.5*V2", "0.5*V1"]"#))
        .unwrap()
        .spec()
        .unwrap();
    let y = [0.3, -1.2];
    for i in 0..2 {
        assert!(((a.f)(0.1, i, 0.2, 0.3, &y) - (b.f)(0.1, i, 0.2, 0.3, &y)).abs() < 1e-15);
        assert!(((a.h)(0.1, i, 0.3, &y) - (b.h)(0.1, i, 0.3, &y)).abs() < 1e-15);
        assert_eq!((a.lambda)(0.1, i, 0.4, 0.0), if i == 0 { -1.0 } else { 1.0 });
    }
    assert!(!a.meta.f_zero && !b.meta.f_zero);
    assert!(ScenarioConfig::from_json(&minimal(", \"F\": \"0\"")).unwrap().spec().unwrap().meta.f_zero);
}

#[test]
fn builtin_speed_fields() {
    let cfg = ScenarioConfig::from_json(&minimal("").replace(
        r#"{"builtin": "unit"}"#,
        r#"{"builtin": "affine", "a": [-1.0, 0.8], "b": [-0.2, 0.1]}"#,
    ))
    .unwrap();
    let sys = cfg.freeze().unwrap();
    assert!((sys.lambda(0, 0.5, 0.0) + 1.1).abs() < 1e-15);
    assert!((sys.lambda(1, 0.5, 0.0) - 0.85).abs() < 1e-15);
    let wrong = minimal("").replace(r#"{"builtin": "unit"}"#, r#"{"builtin": "constant", "speeds": [-1.0]}"#);
    assert!(ScenarioConfig::from_json(&wrong).unwrap_err().is_config());
}

#[test]
fn data_catalog() {
    let cfg = load("linear_advection.json");
    let sys = cfg.freeze().unwrap();
    assert_eq!(sys.a(1, 0.5), 1.0);
    assert_eq!(sys.a(1, 0.6), bump(0.6, 0.5, 0.25));
    assert_eq!(sys.a(0, 0.6), 0.0);

    let delta = load("delta_sweep.json");
    let sys = delta.freeze().unwrap();
    let eps = delta.regularization.epsilon.unwrap();
    let m = delta.mollifier().unwrap();
    assert!((sys.a(1, 0.5) - m.eval(0.0) / eps).abs() < 1e-9 / eps);
    assert_eq!(delta.eps_grid().unwrap().unwrap().len(), 8);
    assert_eq!(delta.component(), Some(1));

    let mut no_eps = delta.clone();
    no_eps.regularization.epsilon = None;
    assert!(no_eps.freeze().unwrap_err().is_config());
}

#[test]
fn loglog_example_derivative() {
    let g = [1.0, 1.0, 2.0, 1.0];
    for &y in &[-30.0, -1.0, 0.0, 0.3, 2.0, 1e3] {
        let h = 1e-6 * f64::max(1.0, f64::abs(y));
        let fd = (loglog_example(&g, y + h) - loglog_example(&g, y - h)) / (2.0 * h);
        assert!((fd - loglog_example_dy(&g, y)).abs() < 1e-6 * fd.abs().max(1.0), "y = {y}");
    }
}
