use gensol_core::gfunc::*;
use gensol_core::mollifier::Mollifier;

fn unit() -> Domain {
    Domain::Interval { a: 0.0, b: 1.0 }
}

fn grid() -> Vec<f64> {
    geometric_grid(0.5, 1e-3, 10)
}

#[test]
fn constant_family_has_order_zero() {
    let f = RepFamily::interval("one", 0.0, 1.0, |_, _| 1.0);
    let r = estimate_growth_order(&f, &unit(), &grid(), (0, 0), &DiagnosticsConfig::default()).unwrap();
    assert!(r.fitted_order.abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Moderate { order: r.fitted_order });
}

#[test]
fn scaled_kernel_has_order_one_and_derivative_order_two() {
    let m = Mollifier::build(2, 1.0).unwrap();
    let m2 = m.clone();
    let f = RepFamily::interval("phi_eps", 0.0, 1.0, move |e, x| m.scale(e).unwrap().eval(x - 0.5));
    let cfg = DiagnosticsConfig::default();
    let g = geometric_grid(0.125, 2f64.powi(-10), 8);
    let r = estimate_growth_order(&f, &unit(), &g, (0, 0), &cfg).unwrap();
    assert!((r.fitted_order - 1.0).abs() < 0.05, "{}", r.fitted_order);
    let r1 = estimate_growth_order(&f, &unit(), &g, (1, 0), &cfg).unwrap();
    assert!((r1.fitted_order - 2.0).abs() < 0.1, "{}", r1.fitted_order);
    // analytic sup|φ_ε'| agrees with the finite-difference sup
    let e = g[3];
    let an = (0..=4000)
        .map(|i| m2.scale(e).unwrap().derivative(-e + 2.0 * e * i as f64 / 4000.0, 1).abs())
        .fold(0.0, f64::max);
    assert!((r1.sup_norms[3] / an - 1.0).abs() < 0.02);
}

#[test]
fn power_law_is_negligible_like() {
    let f = RepFamily::interval("eps^2", 0.0, 1.0, |e, _| e * e);
    let r = estimate_growth_order(&f, &unit(), &grid(), (0, 0), &DiagnosticsConfig::default()).unwrap();
    assert!((r.fitted_order + 2.0).abs() < 1e-10);
    match r.verdict {
        Verdict::NegligibleLike { decay_order } => assert!((decay_order - 2.0).abs() < 1e-10),
        v => panic!("{v:?}"),
    }
}

#[test]
fn identical_families_give_infinite_sentinel() {
    let f = RepFamily::interval("s", 0.0, 1.0, |e, x| (x / e).sin());
    let r = negligibility_order(&f, &f.clone(), &unit(), &grid(), &DiagnosticsConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::NegligibleLike { decay_order: f64::INFINITY });
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"inf\""));
    let back: GrowthReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.verdict, r.verdict);
}

#[test]
fn overflow_gives_inconclusive_with_prefix() {
    let f = RepFamily::interval("blow", 0.0, 1.0, |e, _| if e < 0.01 { f64::INFINITY } else { 1.0 / e });
    let r = estimate_growth_order(&f, &unit(), &grid(), (0, 0), &DiagnosticsConfig::default()).unwrap();
    assert!(matches!(r.verdict, Verdict::Inconclusive { .. }));
    assert!(r.usable_points < r.eps_grid.len());
    assert!((r.fitted_order - 1.0).abs() < 1e-10);
}

#[test]
fn invertibility_examples() {
    let cfg = DiagnosticsConfig::default();
    let one = RepFamily::interval("1", 0.0, 1.0, |_, _| 1.0);
    let r = check_invertibility(&one, &unit(), &grid(), &cfg).unwrap();
    assert!(r.invertible && r.p.unwrap().abs() < 1e-12);

    let eps = RepFamily::interval("eps", 0.0, 1.0, |e, _| e);
    let r = check_invertibility(&eps, &unit(), &grid(), &cfg).unwrap();
    assert!(r.invertible && (r.p.unwrap() - 1.0).abs() < 1e-10);

    let x = RepFamily::interval("x", -1.0, 1.0, |_, x| x);
    let r = check_invertibility(&x, &Domain::Interval { a: -1.0, b: 1.0 }, &grid(), &cfg).unwrap();
    assert!(!r.invertible && r.p.is_none());

    let fast = RepFamily::interval("exp", 0.0, 1.0, |e, _| (-1.0 / e).exp() + 0.0);
    let g = geometric_grid(0.5, 0.005, 8);
    let r = check_invertibility(&fast, &unit(), &g, &cfg).unwrap();
    assert!(!r.invertible);
}

#[test]
fn reciprocal_of_invertible_family_is_moderate_with_same_order() {
    let cfg = DiagnosticsConfig::default();
    let f = RepFamily::interval("f", 0.0, 1.0, |e, x| e.powf(1.5) * (2.0 + x));
    let inv = RepFamily::interval("1/f", 0.0, 1.0, |e, x| 1.0 / (e.powf(1.5) * (2.0 + x)));
    let p = check_invertibility(&f, &unit(), &grid(), &cfg).unwrap().p.unwrap();
    let n = estimate_growth_order(&inv, &unit(), &grid(), (0, 0), &cfg).unwrap().fitted_order;
    assert!((p - n).abs() < 0.05);
}

#[test]
fn product_orders_are_subadditive() {
    let cfg = DiagnosticsConfig::default();
    let f = RepFamily::interval("f", 0.0, 1.0, |e, x| (1.0 + x) / e);
    let g = RepFamily::interval("g", 0.0, 1.0, |e, x| (2.0 - x) * e.powf(-0.5));
    let fg = RepFamily::interval("fg", 0.0, 1.0, |e, x| (1.0 + x) * (2.0 - x) * e.powf(-1.5));
    let o = |h: &RepFamily| estimate_growth_order(h, &unit(), &grid(), (0, 0), &cfg).unwrap().fitted_order;
    assert!(o(&fg) <= o(&f) + o(&g) + 0.2);
}

#[test]
fn doubling_grid_density_is_stable() {
    let cfg = DiagnosticsConfig::default();
    let f = RepFamily::interval("f", 0.0, 1.0, |e, x| e.powf(-0.7) * (1.0 + 0.1 * (x / e).sin()));
    let a = estimate_growth_order(&f, &unit(), &geometric_grid(0.5, 1e-3, 8), (0, 0), &cfg).unwrap();
    let b = estimate_growth_order(&f, &unit(), &geometric_grid(0.5, 1e-3, 16), (0, 0), &cfg).unwrap();
    assert!((a.fitted_order - b.fitted_order).abs() < 0.1);
}

#[test]
fn rectangle_families_are_probed_in_two_dimensions() {
    let f = RepFamily::rectangle("bump", (0.0, 1.0), (0.0, 1.0), |e, x, t| {
        1.0 / (e + (x - 0.3).powi(2) + (t - 0.6).powi(2))
    });
    let cfg = DiagnosticsConfig { lattice_points: 51, ..Default::default() };
    let k = Domain::Rectangle { x: (0.0, 1.0), t: (0.0, 1.0) };
    let r = estimate_growth_order(&f, &k, &grid(), (0, 0), &cfg).unwrap();
    assert!((r.sup_norms[9] - 1000.0).abs() < 1e-6);
}

#[test]
fn gamma_admissibility_examples() {
    let g = geometric_grid(1e-2, 1e-12, 41);
    let verdicts = check_gamma_admissible(&GammaSpec::loglog_quarter(), 4, &g).unwrap();
    assert!(verdicts.iter().all(|v| v.admissible));
    let verdicts = check_gamma_admissible(&GammaSpec::constant(2.0), 4, &g).unwrap();
    assert!(verdicts.iter().all(|v| v.admissible));
    let verdicts = check_gamma_admissible(&GammaSpec::power(0.5), 4, &g).unwrap();
    assert!(verdicts.iter().all(|v| !v.admissible));
    assert!(check_gamma_admissible(&GammaSpec::constant(2.0), 4, &geometric_grid(0.1, 1e-4, 8)).is_err());
}

#[test]
fn diagnostics_are_deterministic() {
    let m = Mollifier::build(2, 1.0).unwrap();
    let f = RepFamily::interval("phi", 0.0, 1.0, move |e, x| m.scale(e).unwrap().eval(x - 0.37));
    let cfg = DiagnosticsConfig::default();
    let a = serde_json::to_string(&estimate_growth_order(&f, &unit(), &grid(), (0, 0), &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&estimate_growth_order(&f, &unit(), &grid(), (0, 0), &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}
