//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use gensol_core::analysis::{
    classify_system, epsilon_sweep, uniqueness_experiment, ClassifierConfig, NonlinearityVerdict, SweepSettings,
};
use gensol_core::gfunc::{check_gamma_admissible, geometric_grid, GammaSpec};
use gensol_core::mollifier::Mollifier;
use gensol_core::output::{boundary_csv, field_csv, sweep_csv, to_json};
use gensol_core::scenario::{bump, ScenarioConfig};
use gensol_core::solver::{solve, SolutionGrid, SolveReport};
use gensol_core::system::FrozenSystem;

const SHIPPED: [&str; 8] = [
    "linear_advection.json",
    "exponential_reaction.json",
    "cavity_echo.json",
    "delta_sweep.json",
    "delta_derivative_sweep.json",
    "nonlinear_smooth.json",
    "uniqueness.json",
    "loglog_classify.json",
];

fn load(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    ScenarioConfig::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(name: &str) -> (FrozenSystem, SolutionGrid, SolveReport) {
    let cfg = load(name);
    let sys = cfg.freeze().unwrap();
    let (grid, report) = solve(&sys, cfg.horizon(), &cfg.solve_config()).unwrap_or_else(|e| panic!("{name}: {e}"));
    (sys, grid, report)
}

fn settings(cfg: &ScenarioConfig) -> SweepSettings {
    SweepSettings {
        solve: cfg.solve_config(),
        probes: cfg.probes(),
        component: cfg.component(),
        diagnostics: cfg.diagnostics(),
    }
}

fn max_node_error(grid: &SolutionGrid, exact: impl Fn(usize, f64, f64) -> Option<f64>) -> f64 {
    let mut err = 0.0f64;
    for (g, &t) in grid.t_nodes.iter().enumerate() {
        for i in 0..grid.n {
            for (j, &x) in grid.x_nodes.iter().enumerate() {
                if let Some(v) = exact(i, x, t) {
                    err = err.max((grid.get(g, i, j) - v).abs());
                }
            }
        }
    }
    err
}

fn echo_exact(i: usize, x: f64, t: f64) -> f64 {
    if i == 1 {
        if t >= x {
            0.5 * echo_exact(0, 0.0, t - x)
        } else {
            bump(x - t, 0.3, 0.15)
        }
    } else if t >= 1.0 - x {
        0.5 * echo_exact(1, 1.0, t - (1.0 - x))
    } else {
        0.0
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

#[derive(Default)]
struct Cache {
    solved: Vec<(String, SolveReport)>,
}

fn c1_moments() -> Outcome {
    let mut worst_mass = 0.0f64;
    let mut worst_moment = 0.0f64;
    for q in [0, 1, 2, 4] {
        let r = Mollifier::build(q, 1.0).unwrap().verify_moments();
        worst_mass = worst_mass.max((r.moments[0] - 1.0).abs());
        for k in 1..=q {
            worst_moment = worst_moment.max(r.moments[k].abs());
        }
    }
    outcome(
        worst_mass <= 1e-10 && worst_moment <= 1e-8,
        format!("max |∫φ − 1| = {worst_mass:.2e} (≤ 1e-10), max |∫x^k φ| = {worst_moment:.2e} (≤ 1e-8)"),
    )
}

fn c2_advection(cache: &mut Cache) -> Outcome {
    let (_, grid, report) = run("linear_advection.json");
    let a2 = |x: f64| bump(x, 0.5, 0.25);
    let err = max_node_error(&grid, |i, x, t| Some(if i == 1 && x >= t { a2(x - t) } else { 0.0 }));
    cache.solved.push(("linear_advection.json".into(), report));
    outcome(err <= 1e-4, format!("max node error {err:.3e} (≤ 1e-4), Nx = {}, T = 2", grid.nx()))
}

fn c4_reaction(cache: &mut Cache) -> Outcome {
    let (_, grid, report) = run("exponential_reaction.json");
    let err = max_node_error(&grid, |i, x, t| {
        (x >= t).then(|| if i == 1 { bump(x - t, 0.5, 0.25) * t.exp() } else { 0.0 })
    });
    cache.solved.push(("exponential_reaction.json".into(), report));
    outcome(err <= 1e-4, format!("max floor-region error {err:.3e} (≤ 1e-4), Nx = {}", grid.nx()))
}

fn c5_echo(cache: &mut Cache) -> Outcome {
    let (_, grid, report) = run("cavity_echo.json");
    let mut err = 0.0f64;
    for k in 0..20 {
        let x = 0.05 + 0.9 * ((k as f64 * 0.618_033_988_749_895) % 1.0);
        let t = 0.15 * (k + 1) as f64;
        for i in 0..2 {
            err = err.max((grid.eval(i, x, t) - echo_exact(i, x, t)).abs());
        }
    }
    cache.solved.push(("cavity_echo.json".into(), report));
    outcome(err <= 1e-3, format!("max probe error {err:.3e} at 20 probes (≤ 1e-3), T = 3"))
}

fn c11_derivative(cache: &mut Cache) -> Outcome {
    let (_, grid, report) = run("nonlinear_smooth.json");
    let dx = grid.x_nodes[1] - grid.x_nodes[0];
    let mut err = 0.0f64;
    for g in 0..grid.levels() {
        for i in 0..grid.n {
            for j in 1..grid.nx() {
                let fd = (grid.get(g, i, j + 1) - grid.get(g, i, j - 1)) / (2.0 * dx);
                err = err.max((fd - grid.derivative_at(g, i, j).unwrap()).abs());
            }
        }
    }
    cache.solved.push(("nonlinear_smooth.json".into(), report));
    outcome(err <= 1e-3, format!("max |W − centered difference| {err:.3e} on interior nodes (≤ 1e-3)"))
}

fn c3_contraction(cache: &mut Cache) -> Outcome {
    for name in SHIPPED {
        if !cache.solved.iter().any(|(n, _)| n == name) {
            let (_, _, report) = run(name);
            cache.solved.push((name.into(), report));
        }
    }
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut max_iter = 0usize;
    let mut failures = Vec::new();
    for (name, report) in &cache.solved {
        for s in report.slabs.iter().chain(&report.derivative_slabs) {
            worst_ratio = worst_ratio.max(s.max_ratio);
            worst_excess = worst_excess.max(s.max_ratio - s.q_t);
            max_iter = max_iter.max(s.iterations);
            let ok = s.max_ratio < 1.0 && s.max_ratio <= s.q_t + 0.1 && s.iterations <= 60 && s.final_diff <= 1e-10;
            if !ok {
                failures.push(format!("{name} slab {}", s.index));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} scenarios: max ratio {worst_ratio:.3}, max (ratio − q t) {worst_excess:.3} (≤ 0.1), max iterations {max_iter} (≤ 60){}",
            cache.solved.len(),
            if failures.is_empty() { String::new() } else { format!(", failing: {}", failures.join("; ")) }
        ),
    )
}

fn c6_apriori(cache: &Cache) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut strict = true;
    for name in ["linear_advection.json", "exponential_reaction.json", "cavity_echo.json", "delta_sweep.json"] {
        let r = &cache.solved.iter().find(|(n, _)| n == name).expect("solved").1;
        pass &= r.sup_achieved <= r.apriori_bound;
        strict &= r.sup_achieved < r.apriori_bound;
        parts.push(format!("{} {:.4} ≤ {:.4}", name.trim_end_matches(".json"), r.sup_achieved, r.apriori_bound));
    }
    outcome(pass, format!("{} (strict: {strict})", parts.join(", ")))
}

fn sweep_order(name: &str) -> (f64, bool) {
    let cfg = load(name);
    let grid = cfg.eps_grid().unwrap().unwrap();
    let res = epsilon_sweep(&cfg.spec().unwrap(), &cfg.mollifier().unwrap(), &grid, cfg.horizon(), &settings(&cfg)).unwrap();
    (res.solution_growth.fitted_order, res.entries.iter().all(|e| e.converged()))
}

fn c7_moderateness() -> Outcome {
    let (o1, ok1) = sweep_order("delta_sweep.json");
    let (o2, ok2) = sweep_order("delta_derivative_sweep.json");
    // sup |φ_ε'| = sup |φ'| / ε² for the kernel used by the sweep.
    let m = load("delta_derivative_sweep.json").mollifier().unwrap();
    let sup1 = (0..=2000).map(|k| m.derivative(-1.0 + k as f64 / 1000.0, 1).abs()).fold(0.0, f64::max);
    let scaled = m.scale(0.125).unwrap();
    let sup_eps = (0..=2000)
        .map(|k| scaled.derivative(0.125 * (-1.0 + k as f64 / 1000.0), 1).abs())
        .fold(0.0, f64::max);
    let kernel_ok = (sup_eps * 0.125 * 0.125 / sup1 - 1.0).abs() < 1e-12;
    outcome(
        ok1 && ok2 && kernel_ok && (o1 - 1.0).abs() <= 0.15 && (o2 - 2.0).abs() <= 0.2,
        format!("delta order {o1:.4} (1.0 ± 0.15), derivative-of-delta order {o2:.4} (2.0 ± 0.2)"),
    )
}

fn c8_uniqueness() -> Outcome {
    let cfg = load("uniqueness.json");
    let phi = cfg.mollifier().unwrap();
    let psi = cfg.second_mollifier().unwrap().unwrap();
    let grid = cfg.eps_grid().unwrap().unwrap();
    let res = uniqueness_experiment(&cfg.spec().unwrap(), &phi, &psi, &grid, cfg.horizon(), &settings(&cfg)).unwrap();
    let d = res.decay_order();
    outcome(
        d >= 2.5,
        format!("decay order {d:.3} (≥ 2.5), q = {}, radii {} and {}", phi.q(), phi.radius(), psi.radius()),
    )
}

fn c9_gamma() -> Outcome {
    let g = geometric_grid(1e-2, 1e-12, 41);
    let admissible = |s: &GammaSpec| check_gamma_admissible(s, 4, &g).unwrap().iter().all(|v| v.admissible);
    let quarter = admissible(&GammaSpec::loglog_quarter());
    let constant = admissible(&GammaSpec::constant(1.0)) && admissible(&GammaSpec::constant(2.0));
    let power_fails = check_gamma_admissible(&GammaSpec::power(0.5), 4, &g)
        .unwrap()
        .iter()
        .all(|v| !v.admissible);
    outcome(
        quarter && constant && power_fails,
        format!("(log log 1/ε)^(1/4): {quarter}, constants: {constant}, ε^(-1/2) rejected: {power_fails} (N ≤ 4)"),
    )
}

fn c10_classifier() -> Outcome {
    let cfg = ClassifierConfig::default();
    let radii = geometric_grid(1.0, 1e6, 25);
    let ex = load("loglog_classify.json").freeze().unwrap();
    let scalar = |f: fn(f64) -> f64| FrozenSystem::builder(1, 1, 1.0).unwrap().source(move |_, _, _, y| f(y[0])).build().unwrap();
    let a = classify_system(&ex, 1.0, &radii, &cfg).unwrap().verdict;
    let b = classify_system(&scalar(|y| 3.0 * y), 1.0, &radii, &cfg).unwrap().verdict;
    let c = classify_system(&scalar(|y| y * y), 1.0, &radii, &cfg).unwrap().verdict;
    let ok_a = matches!(a, NonlinearityVerdict::Loglog { c_f } if c_f.is_finite());
    let ok_b = matches!(b, NonlinearityVerdict::Lipschitz { constant } if (constant - 3.0).abs() <= 0.05 * 3.0);
    let ok_c = matches!(c, NonlinearityVerdict::NoneOfTheAbove { .. });
    let short = |v: &NonlinearityVerdict| match v {
        NonlinearityVerdict::NoneOfTheAbove { .. } => "none_of_the_above".to_string(),
        other => format!("{other:?}"),
    };
    outcome(
        ok_a && ok_b && ok_c,
        format!("example: {}, 3U: {}, U²: {}", short(&a), short(&b), short(&c)),
    )
}

fn c12_determinism() -> Outcome {
    let render = || {
        let (_, grid, report) = run("exponential_reaction.json");
        let mut bytes = to_json(&report);
        for i in 0..grid.n {
            bytes.push_str(&field_csv(&grid, i));
        }
        bytes.push_str(&boundary_csv(&grid));
        bytes
    };
    let sweep = || {
        let cfg = load("delta_sweep.json");
        let grid = cfg.eps_grid().unwrap().unwrap();
        let res = epsilon_sweep(&cfg.spec().unwrap(), &cfg.mollifier().unwrap(), &grid, cfg.horizon(), &settings(&cfg)).unwrap();
        sweep_csv(&res) + &to_json(&res)
    };
    let (a, b) = (render(), render());
    let (c, d) = (sweep(), sweep());
    outcome(
        a == b && c == d,
        format!("solve outputs identical: {} ({} bytes), sweep outputs identical: {}", a == b, a.len(), c == d),
    )
}

fn main() {
    let mut cache = Cache::default();
    type Check<'a> = Box<dyn FnOnce(&mut Cache) -> Outcome + 'a>;
    let criteria: Vec<(u32, &str, Duration, Check)> = vec![
        (1, "mollifier moments", Duration::from_secs(1), Box::new(|_| c1_moments())),
        (2, "advection exactness", Duration::from_secs(10), Box::new(c2_advection)),
        (4, "reaction closed form", Duration::from_secs(10), Box::new(c4_reaction)),
        (5, "nonlocal echo", Duration::from_secs(30), Box::new(c5_echo)),
        (11, "derivative system", Duration::from_secs(30), Box::new(c11_derivative)),
        (3, "contraction", Duration::from_secs(600), Box::new(c3_contraction)),
        (6, "a priori bound", Duration::from_secs(1), Box::new(|c| c6_apriori(c))),
        (7, "moderateness sweep", Duration::from_secs(120), Box::new(|_| c7_moderateness())),
        (8, "negligibility / uniqueness", Duration::from_secs(120), Box::new(|_| c8_uniqueness())),
        (9, "gamma admissibility", Duration::from_secs(1), Box::new(|_| c9_gamma())),
        (10, "nonlinearity classifier", Duration::from_secs(10), Box::new(|_| c10_classifier())),
        (12, "determinism", Duration::from_secs(600), Box::new(|_| c12_determinism())),
    ];
    let mut lines = Vec::new();
    for (id, title, limit, check) in criteria {
        let start = Instant::now();
        let out = check(&mut cache);
        let took = start.elapsed();
        let pass = out.pass && took <= limit;
        let line = format!(
            "{} [{id:>2}] {title}: {} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
        println!("{line}");
        lines.push((id, pass, line));
    }
    lines.sort_by_key(|l| l.0);
    let failed: Vec<_> = lines.iter().filter(|l| !l.1).collect();
    println!("acceptance: {} of {} criteria pass", lines.len() - failed.len(), lines.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
