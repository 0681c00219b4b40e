use gensol_core::characteristics::*;
use gensol_core::system::FrozenSystem;
use proptest::prelude::*;

fn constant(speeds: [f64; 2]) -> FrozenSystem {
    FrozenSystem::builder(2, 1, 1.0)
        .unwrap()
        .lambda(move |i, _, _| speeds[i])
        .build()
        .unwrap()
}

fn exponential() -> FrozenSystem {
    FrozenSystem::builder(2, 1, 1.0)
        .unwrap()
        .lambda(|i, x, _| if i == 0 { -(1.0 + x) } else { 1.0 + x })
        .build()
        .unwrap()
}

#[test]
fn straight_line_exits() {
    let sys = constant([-1.0, 1.0]);
    let tr = trace_characteristic(&sys, 1, 0.7, 0.4, 1e-10).unwrap();
    assert_eq!(tr.exit_kind, ExitKind::Initial);
    assert_eq!(tr.exit_time, 0.0);
    assert!((tr.exit_xi - 0.3).abs() < 1e-10);

    let tr = trace_characteristic(&sys, 1, 0.3, 0.8, 1e-10).unwrap();
    assert_eq!(tr.exit_kind, ExitKind::Left);
    assert!((tr.exit_time - 0.5).abs() < 1e-10);
    assert!(tr.exit_xi.abs() < 1e-10);
}

#[test]
fn exponential_characteristic_matches_closed_form() {
    let sys = exponential();
    let (x, t) = (0.2, 0.9);
    let tr = trace_characteristic(&sys, 0, x, t, 1e-10).unwrap();
    // ξ(τ) = (1 + x) e^{t − τ} − 1 reaches l = 1 at τ = t − ln(2 / (1 + x))
    let hit = t - (2.0 / (1.0 + x)).ln();
    assert_eq!(tr.exit_kind, ExitKind::Right);
    assert!((tr.exit_time - hit).abs() < 1e-8, "{} vs {hit}", tr.exit_time);
    for &(tau, xi) in &tr.samples {
        let exact = (1.0 + x) * (t - tau).exp() - 1.0;
        assert!((xi - exact).abs() < 1e-8, "tau={tau}: {xi} vs {exact}");
    }
    // linear interpolation between samples stays within tol of the path
    for w in tr.samples.windows(2) {
        let (t0, x0) = w[0];
        let (t1, x1) = w[1];
        let tm = 0.5 * (t0 + t1);
        let lin = 0.5 * (x0 + x1);
        let exact = (1.0 + x) * (t - tm).exp() - 1.0;
        assert!((lin - exact).abs() < 1e-9);
    }
}

#[test]
fn samples_are_monotone_and_inside() {
    let sys = exponential();
    let tr = trace_characteristic(&sys, 1, 0.9, 2.0, 1e-9).unwrap();
    assert!(tr.samples.windows(2).all(|w| w[1].0 <= w[0].0));
    assert!(tr.samples.iter().all(|&(_, xi)| (0.0..=1.0).contains(&xi)));
    assert_eq!(tr.exit_kind, ExitKind::Left);
}

#[test]
fn level_trace_agrees_with_full_trace() {
    let sys = exponential();
    let levels: Vec<f64> = (0..10).rev().map(|j| 0.1 * j as f64).collect();
    let lt = trace_levels(&sys, 1, 0.8, 1.0, 0.0, &levels[1..], 1e-10).unwrap();
    for (j, &xi) in lt.xi.iter().enumerate() {
        let tau = levels[1 + j];
        let exact = 1.8 * (tau - 1.0).exp() - 1.0;
        assert!((xi - exact).abs() < 1e-9);
        assert!(tau > lt.exit.tau);
    }
    let full = trace_characteristic(&sys, 1, 0.8, 1.0, 1e-10).unwrap();
    assert!((full.exit_time - lt.exit.tau).abs() < 1e-9);
}

#[test]
fn boundary_seeds_leave_at_once_and_floor_wins_at_corner() {
    let sys = constant([-1.0, 1.0]);
    let tr = trace_characteristic(&sys, 1, 0.0, 0.5, 1e-10).unwrap();
    assert_eq!((tr.exit_kind, tr.exit_time), (ExitKind::Left, 0.5));
    let tr = trace_characteristic(&sys, 0, 1.0, 0.5, 1e-10).unwrap();
    assert_eq!((tr.exit_kind, tr.exit_time), (ExitKind::Right, 0.5));
    let tr = trace_characteristic(&sys, 1, 0.0, 0.0, 1e-10).unwrap();
    assert_eq!(tr.exit_kind, ExitKind::Initial);
    let tr = trace_characteristic(&sys, 1, 0.5, 0.5, 1e-10).unwrap();
    assert_eq!(tr.exit_kind, ExitKind::Initial);
}

#[test]
fn geometric_bound_examples() {
    let b = slab_bound_geometric(&constant([-1.0, 1.0]), 0.0, 10.0).unwrap();
    assert!((b.bound - 0.45).abs() < 1e-9);
    let b = slab_bound_geometric(&constant([-2.0, 2.0]), 0.0, 10.0).unwrap();
    assert!((b.bound - 0.225).abs() < 1e-9);
    let b = slab_bound_geometric(&exponential(), 0.0, 10.0).unwrap();
    let meet = 0.5 * 2f64.ln();
    assert!((b.meeting.unwrap() - meet).abs() < 1e-6);
    assert!((b.bound - 0.9 * meet).abs() < 1e-6);
    let b = slab_bound_geometric(&constant([-1.0, 1.0]), 0.0, 0.3).unwrap();
    assert_eq!(b.bound, 0.3);
    assert!(b.meeting.is_none());
}

#[test]
fn all_left_moving_components() {
    let sys = FrozenSystem::builder(1, 1, 1.0).unwrap().lambda(|_, _, _| -2.0).build().unwrap();
    let b = slab_bound_geometric(&sys, 0.0, 5.0).unwrap();
    assert!((b.meeting.unwrap() - 0.5).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup_property(x in 0.0f64..1.0, t in 0.0f64..2.0, frac in 0.05f64..0.95, i in 0usize..2) {
        let sys = exponential();
        let tol = 1e-9;
        let full = trace_characteristic(&sys, i, x, t, tol).unwrap();
        let s = full.exit_time + frac * (t - full.exit_time);
        let lt = trace_levels(&sys, i, x, t, 0.0, &[s], tol).unwrap();
        prop_assume!(!lt.xi.is_empty());
        let again = trace_characteristic(&sys, i, lt.xi[0], s, tol).unwrap();
        prop_assert!((again.exit_time - full.exit_time).abs() <= 2.0 * tol + 1e-12);
    }

    #[test]
    fn exit_kinds_follow_speed_sign(x in 0.0f64..1.0, t in 0.0f64..3.0, i in 0usize..2) {
        let sys = exponential();
        let tr = trace_characteristic(&sys, i, x, t, 1e-9).unwrap();
        if i == 0 {
            prop_assert!(tr.exit_kind != ExitKind::Left);
        } else {
            prop_assert!(tr.exit_kind != ExitKind::Right);
        }
        prop_assert_eq!(tr.exit_kind == ExitKind::Initial, tr.exit_time == 0.0);
        match tr.exit_kind {
            ExitKind::Left => prop_assert!(tr.exit_xi.abs() <= 1e-9),
            ExitKind::Right => prop_assert!((tr.exit_xi - 1.0).abs() <= 1e-9),
            ExitKind::Initial => {}
        }
    }

    #[test]
    fn exit_time_nonincreasing_in_x_for_positive_speed(t in 0.5f64..2.0, x0 in 0.0f64..0.9) {
        let sys = exponential();
        let a = trace_characteristic(&sys, 1, x0, t, 1e-10).unwrap().exit_time;
        let b = trace_characteristic(&sys, 1, x0 + 0.1, t, 1e-10).unwrap().exit_time;
        prop_assert!(b <= a + 1e-9);
    }
}
