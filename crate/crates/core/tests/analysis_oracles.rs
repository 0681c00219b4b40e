use std::path::PathBuf;

use gensol_core::analysis::{
    classify_samples, classify_system, epsilon_sweep, q_m, uniqueness_experiment, verify_estimates, verify_solution,
    ClassifierConfig, NonlinearityVerdict, SweepSettings,
};
use gensol_core::gfunc::{geometric_grid, Verdict};
use gensol_core::mollifier::Mollifier;
use gensol_core::scenario::ScenarioConfig;
use gensol_core::solver::solve;
use gensol_core::system::FrozenSystem;
use proptest::prelude::*;

fn load(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    ScenarioConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn settings(cfg: &ScenarioConfig) -> SweepSettings {
    SweepSettings {
        solve: cfg.solve_config(),
        probes: cfg.probes(),
        component: cfg.component(),
        diagnostics: cfg.diagnostics(),
    }
}

fn sweep_order(name: &str) -> f64 {
    let cfg = load(name);
    let grid = cfg.eps_grid().unwrap().unwrap();
    let res = epsilon_sweep(&cfg.spec().unwrap(), &cfg.mollifier().unwrap(), &grid, cfg.horizon(), &settings(&cfg)).unwrap();
    assert!(res.entries.iter().all(|e| e.converged()), "{:?}", res.entries);
    println!("{name}: sups {:?}", res.solution_growth.sup_norms);
    assert!(verify_estimates(&res).passed);
    res.solution_growth.fitted_order
}

#[test]
fn q_m_examples() {
    assert_eq!(q_m(2, 1.0, 0.5, 3.0, 2), 16.0);
    assert_eq!(q_m(3, 0.7, 0.2, 5.0, 0), 3.0 * 0.7 * (1.0 + 3.0 * 0.2));
}

#[test]
fn delta_sweep_grows_at_order_one() {
    let order = sweep_order("delta_sweep.json");
    assert!((order - 1.0).abs() <= 0.15, "order {order}");
}

#[test]
fn delta_derivative_sweep_grows_at_order_two() {
    let order = sweep_order("delta_derivative_sweep.json");
    assert!((order - 2.0).abs() <= 0.2, "order {order}");
}

#[test]
fn smooth_linear_sweep_is_eps_independent() {
    let mut cfg = load("uniqueness.json");
    cfg.numerics.nx = 100;
    let grid = cfg.eps_grid().unwrap().unwrap();
    let res = epsilon_sweep(&cfg.spec().unwrap(), &cfg.mollifier().unwrap(), &grid, cfg.horizon(), &settings(&cfg)).unwrap();
    assert!(res.solution_growth.fitted_order.abs() < 0.05, "{:?}", res.solution_growth);
    assert!(verify_estimates(&res).passed);
}

#[test]
fn delta_probes_off_the_characteristic_vanish() {
    let cfg = load("delta_sweep.json");
    let m = cfg.mollifier().unwrap();
    let mut s = settings(&cfg);
    s.probes = vec![(0.2, 0.2), (0.9, 0.1)];
    s.solve.nx = 1024;
    let res = epsilon_sweep(&cfg.spec().unwrap(), &m, &[0.125, 0.0625, 0.03125], cfg.horizon(), &s).unwrap();
    assert!(res.entries.iter().all(|e| e.probe_sup == 0.0));
}

#[test]
fn identical_mollifiers_give_zero_difference() {
    let cfg = load("uniqueness.json");
    let mut s = settings(&cfg);
    s.solve.nx = 64;
    let m = cfg.mollifier().unwrap();
    let grid = geometric_grid(0.125, 0.0009765625, 8);
    let res = uniqueness_experiment(&cfg.spec().unwrap(), &m, &m, &grid, cfg.horizon(), &s).unwrap();
    assert!(res.entries.iter().all(|e| e.difference == 0.0));
    assert!(matches!(res.report.verdict, Verdict::NegligibleLike { .. }));
}

#[test]
fn distinct_mollifiers_differ_negligibly() {
    let cfg = load("uniqueness.json");
    let phi = cfg.mollifier().unwrap();
    let psi = cfg.second_mollifier().unwrap().unwrap();
    let grid = cfg.eps_grid().unwrap().unwrap();
    let res = uniqueness_experiment(&cfg.spec().unwrap(), &phi, &psi, &grid, cfg.horizon(), &settings(&cfg)).unwrap();
    println!("differences {:?}", res.entries.iter().map(|e| e.difference).collect::<Vec<_>>());
    assert!(res.decay_order() >= 2.5, "{:?}", res.report);
    let other = Mollifier::build(1, 1.0).unwrap();
    assert!(uniqueness_experiment(&cfg.spec().unwrap(), &phi, &other, &grid, cfg.horizon(), &settings(&cfg)).is_err());
}

fn radii() -> Vec<f64> {
    geometric_grid(1.0, 1e6, 25)
}

fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> FrozenSystem {
    FrozenSystem::builder(1, 1, 1.0).unwrap().source(move |_, _, _, y| f(y[0])).build().unwrap()
}

#[test]
fn classifier_examples() {
    let cfg = ClassifierConfig::default();
    let ex = load("loglog_classify.json").freeze().unwrap();
    let c = classify_system(&ex, 1.0, &radii(), &cfg).unwrap();
    println!("{:?}", c.fits);
    match c.verdict {
        NonlinearityVerdict::Loglog { c_f } => assert!(c_f.is_finite() && c_f > 0.0),
        v => panic!("example classified {v:?}"),
    }

    let lin = classify_system(&scalar(|y| -2.5 * y), 1.0, &radii(), &cfg).unwrap();
    match lin.verdict {
        NonlinearityVerdict::Lipschitz { constant } => assert!((constant - 2.5).abs() <= 0.05 * 2.5),
        v => panic!("linear classified {v:?}"),
    }

    let quad = classify_system(&scalar(|y| y * y), 1.0, &radii(), &cfg).unwrap();
    assert!(matches!(quad.verdict, NonlinearityVerdict::NoneOfTheAbove { .. }), "{:?}", quad.verdict);

    let sine = classify_system(&scalar(|y| 0.7 * y.sin()), 1.0, &radii(), &cfg).unwrap();
    assert!(matches!(sine.verdict, NonlinearityVerdict::Lipschitz { .. }), "{:?}", sine.verdict);

    assert!(classify_samples(&[1.0, 2.0, 10.0], &[1.0, 1.0, 1.0], &cfg).is_err());
}

#[test]
fn quarter_power_growth_is_recognized() {
    let r = radii();
    let g: Vec<f64> = r.iter().map(|x| 0.5 + 2.0 * (3.0 + x.ln_1p()).ln().powf(0.25)).collect();
    let c = classify_samples(&r, &g, &ClassifierConfig::default()).unwrap();
    assert!(matches!(c.verdict, NonlinearityVerdict::LoglogQuarter { .. }), "{:?} {:?}", c.verdict, c.fits);
}

#[test]
fn verification_of_single_solves() {
    for name in ["linear_advection.json", "exponential_reaction.json", "cavity_echo.json"] {
        let mut cfg = load(name);
        cfg.numerics.nx = 100;
        let sys = cfg.freeze().unwrap();
        let (grid, report) = solve(&sys, cfg.horizon(), &cfg.solve_config()).unwrap();
        let row = verify_solution(&sys, &grid, &report).unwrap();
        assert!(row.passed, "{name}: {row:?}");
        if name == "exponential_reaction.json" {
            // The recurrence dominates the growth factor e of the source.
            assert!(report.apriori_bound >= std::f64::consts::E);
            assert!(report.sup_achieved <= report.apriori_bound);
        }
    }
}

#[test]
fn derivative_bound_on_the_nonlinear_scenario() {
    let mut cfg = load("nonlinear_smooth.json");
    cfg.numerics.nx = 100;
    let sys = cfg.freeze().unwrap();
    let (grid, report) = solve(&sys, cfg.horizon(), &cfg.solve_config()).unwrap();
    let row = verify_solution(&sys, &grid, &report).unwrap();
    println!("{row:?}");
    assert!(row.passed, "{row:?}");
    assert!(row.derivative.unwrap().satisfied);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lipschitz_constant_scales(c in 0.1..20.0f64, sign in prop::bool::ANY) {
        let r = radii();
        let c = if sign { c } else { -c };
        let g = vec![c.abs(); r.len()];
        let out = classify_samples(&r, &g, &ClassifierConfig::default()).unwrap();
        match out.verdict {
            NonlinearityVerdict::Lipschitz { constant } => prop_assert!((constant - c.abs()).abs() <= 1e-12 * c.abs()),
            v => prop_assert!(false, "{:?}", v),
        }
    }

    #[test]
    fn classification_is_scale_invariant(s in 0.01..100.0f64) {
        let r = radii();
        let g: Vec<f64> = r.iter().map(|x| 1.0 + (0.7 + x.ln_1p()).ln()).collect();
        let a = classify_samples(&r, &g, &ClassifierConfig::default()).unwrap();
        let gs: Vec<f64> = g.iter().map(|v| s * v).collect();
        let b = classify_samples(&r, &gs, &ClassifierConfig::default()).unwrap();
        prop_assert_eq!(std::mem::discriminant(&a.verdict), std::mem::discriminant(&b.verdict));
    }
}
