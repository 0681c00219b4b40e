//! Cross-ε experiments and estimate verification: solution-family sweeps,
//! two-mollifier uniqueness experiments, growth classification of the
//! nonlinearity, and checks of the a priori bounds against measured solutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfunc::{growth_report_from_sups, DiagnosticsConfig, GrowthReport};
use crate::mollifier::Mollifier;
use crate::numfmt::{nonfinite, nonfinite_vec};
use crate::solver::{estimate_lipschitz, solve, SolutionGrid, SolveConfig, SolveReport};
use crate::system::{FrozenSystem, SystemSpec};

pub use crate::solver::q_m;

/// Slack allowed on measured contraction ratios above the planned `q t_slab`.
pub const RATIO_SLACK: f64 = 0.1;
/// Sampling density of `A'` relative to the grid.
const DATA_REFINE: usize = 8;

/// Settings shared by the cross-ε experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub solve: SolveConfig,
    /// Probe points `(x, t)`.
    pub probes: Vec<(f64, f64)>,
    /// 0-based component the sup-norms are taken over; all when `None`.
    pub component: Option<usize>,
    pub diagnostics: DiagnosticsConfig,
}

impl SweepSettings {
    pub fn new(solve: SolveConfig) -> Self {
        Self {
            solve,
            probes: Vec::new(),
            component: None,
            diagnostics: DiagnosticsConfig::default(),
        }
    }

    fn components(&self, n: usize) -> Result<Vec<usize>> {
        match self.component {
            Some(c) if c >= n => Err(Error::InvalidArgument(format!(
                "component {c} out of range for n = {n}"
            ))),
            Some(c) => Ok(vec![c]),
            None => Ok((0..n).collect()),
        }
    }

    fn probe_label(&self) -> String {
        let pts: Vec<String> = self.probes.iter().map(|(x, t)| format!("({x}, {t})")).collect();
        let comp = match self.component {
            Some(c) => format!("component {}", c + 1),
            None => "all components".into(),
        };
        format!("probes [{}], {comp}", pts.join(", "))
    }
}

/// Why one ε of an experiment produced no solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl From<&Error> for Failure {
    fn from(e: &Error) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// The parts of a [`SolveReport`] an experiment keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub slab_count: usize,
    pub t_slab: f64,
    pub q0: f64,
    /// `q0 t_slab`.
    pub q0_t: f64,
    pub l_f: f64,
    pub l_h: f64,
    pub e_lambda_10: f64,
    pub lambda_floor: f64,
    pub iterations: Vec<usize>,
    pub max_ratio: f64,
    /// Every slab contracts: ratio below 1 and within the slack of `q t_slab`.
    pub contraction_ok: bool,
    #[serde(with = "nonfinite")]
    pub apriori_bound: f64,
    pub sup_achieved: f64,
    pub bound_satisfied: bool,
    pub restarts: usize,
}

impl SolveSummary {
    pub fn from_report(r: &SolveReport) -> Self {
        let slabs = r.slabs.iter().chain(&r.derivative_slabs);
        let contraction_ok = slabs.clone().all(|s| {
            s.ratios
                .iter()
                .all(|&q| q < 1.0 && (q <= s.q_t + RATIO_SLACK || !s.q_t.is_finite()))
        });
        Self {
            slab_count: r.plan.slab_count,
            t_slab: r.plan.t_slab,
            q0: r.plan.q0,
            q0_t: r.plan.q0 * r.plan.t_slab,
            l_f: r.lipschitz.l_f,
            l_h: r.lipschitz.l_h,
            e_lambda_10: r.lipschitz.e_lambda_10,
            lambda_floor: r.lambda_floor,
            iterations: r.iterations.clone(),
            max_ratio: slabs.map(|s| s.max_ratio).fold(0.0, f64::max),
            contraction_ok,
            apriori_bound: r.apriori_bound,
            sup_achieved: r.sup_achieved,
            bound_satisfied: r.bound_satisfied,
            restarts: r.restarts,
        }
    }
}

/// Check of the first-derivative estimate on one solution.
///
/// The bound iterates
/// `B ← [(B + T E_F(1,0) + E_{Λ⁻¹} E_F(0,0))(1 + n L_H) + E_{Λ⁻¹} E_H(1)] / (1 − q1 t_slab)`
/// over the slabs, starting from `max |A'|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    /// `max |∂_x U|` from the derivative system.
    pub measured: f64,
    #[serde(with = "nonfinite")]
    pub bound: f64,
    pub satisfied: bool,
    pub max_a_prime: f64,
    /// `max |∂_x F(x, t, U)|`.
    pub e_f10: f64,
    /// `max |F(x, t, U)|`.
    pub e_f00: f64,
    /// `max |∂_t H(t, V(t))|`.
    pub e_h1: f64,
    /// `1 / min |Λ|`.
    pub e_lambda_inv: f64,
    pub q1: f64,
    pub t_slab: f64,
    pub slab_count: usize,
}

/// Assembles the derivative bound from measured quantities of a solution
/// computed with the derivative system.
pub fn check_derivative_bound(sys: &FrozenSystem, grid: &SolutionGrid, report: &SolveReport) -> Result<DerivativeCheck> {
    let w = grid
        .derivative
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("solution carries no derivative".into()))?;
    let n = sys.n;
    let nx = grid.nx();
    let measured = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let pts = DATA_REFINE * nx;
    let mut max_a_prime = 0.0f64;
    for i in 0..n {
        for a in 0..=pts {
            max_a_prime = max_a_prime.max(sys.a_prime(i, sys.l * a as f64 / pts as f64).abs());
        }
    }
    let mut e_f10 = 0.0f64;
    let mut e_f00 = 0.0f64;
    let mut e_h1 = 0.0f64;
    let mut y = vec![0.0; n];
    for (g, &t) in grid.t_nodes.iter().enumerate() {
        if !sys.meta.f_zero {
            for (j, &x) in grid.x_nodes.iter().enumerate() {
                for (c, o) in y.iter_mut().enumerate() {
                    *o = grid.get(g, c, j);
                }
                for i in 0..n {
                    e_f10 = e_f10.max(sys.f_x(i, x, t, &y).abs());
                    e_f00 = e_f00.max(sys.f(i, x, t, &y).abs());
                }
            }
        }
        if !sys.meta.h_zero {
            let v = grid.boundary_at(g);
            for i in 0..n {
                e_h1 = e_h1.max(sys.h_t(i, t, v).abs());
            }
        }
    }
    let lip = &report.lipschitz;
    let plan = &report.plan;
    let q1 = q_m(n, lip.l_f, lip.l_h, lip.e_lambda_10, 1);
    let e_lambda_inv = 1.0 / report.lambda_floor;
    let qt = q1 * plan.t_slab;
    let bound = if qt >= 1.0 {
        f64::INFINITY
    } else {
        let gain = 1.0 + n as f64 * lip.l_h;
        let mut b = max_a_prime;
        for _ in 0..plan.slab_count {
            b = ((b + plan.horizon * e_f10 + e_lambda_inv * e_f00) * gain + e_lambda_inv * e_h1) / (1.0 - qt);
        }
        b
    };
    Ok(DerivativeCheck {
        measured,
        bound,
        satisfied: measured <= bound,
        max_a_prime,
        e_f10,
        e_f00,
        e_h1,
        e_lambda_inv,
        q1,
        t_slab: plan.t_slab,
        slab_count: plan.slab_count,
    })
}

/// Outcome of one ε of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub failure: Option<Failure>,
    pub summary: Option<SolveSummary>,
    /// Sup over the grid of the selected components; NaN on failure.
    #[serde(with = "nonfinite")]
    pub sup: f64,
    /// `U_c` at each probe for the selected components, probe-major.
    #[serde(with = "nonfinite_vec")]
    pub probe_values: Vec<f64>,
    #[serde(with = "nonfinite")]
    pub probe_sup: f64,
    pub derivative: Option<DerivativeCheck>,
}

impl SweepEntry {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }
}

/// Results of an ε-sweep of one problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub label: String,
    pub eps_grid: Vec<f64>,
    pub probes: Vec<(f64, f64)>,
    pub components: Vec<usize>,
    pub entries: Vec<SweepEntry>,
    /// Growth of the grid sup-norm across ε.
    pub solution_growth: GrowthReport,
    /// Growth of the sup over the probe points.
    pub probe_growth: GrowthReport,
    /// Growth of the measured `q0(ε)`.
    pub q_growth: GrowthReport,
    /// Growth of the measured `L_F(ε)`.
    pub lipschitz_growth: GrowthReport,
}

fn check_eps_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("epsilon grid is empty".into()));
    }
    if grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidArgument("epsilon values must lie in (0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("epsilon grid must be strictly decreasing".into()));
    }
    Ok(())
}

fn grid_sup(grid: &SolutionGrid, comps: &[usize]) -> f64 {
    let mut s = 0.0f64;
    for g in 0..grid.levels() {
        for &c in comps {
            let start = grid.idx(g, c, 0);
            for v in &grid.values[start..start + grid.x_nodes.len()] {
                s = s.max(v.abs());
            }
        }
    }
    s
}

fn sweep_entry(
    spec: &SystemSpec,
    mollifier: &Mollifier,
    eps: f64,
    horizon: f64,
    settings: &SweepSettings,
    comps: &[usize],
) -> SweepEntry {
    let failed = |e: &Error| SweepEntry {
        eps,
        failure: Some(Failure::from(e)),
        summary: None,
        sup: f64::NAN,
        probe_values: Vec::new(),
        probe_sup: f64::NAN,
        derivative: None,
    };
    let sys = match spec.freeze(Some(eps), Some(mollifier)) {
        Ok(s) => s,
        Err(e) => return failed(&e),
    };
    let (grid, report) = match solve(&sys, horizon, &settings.solve) {
        Ok(r) => r,
        Err(e) => return failed(&e),
    };
    let derivative = if settings.solve.derivative {
        match check_derivative_bound(&sys, &grid, &report) {
            Ok(d) => Some(d),
            Err(e) => return failed(&e),
        }
    } else {
        None
    };
    let mut probe_values = Vec::with_capacity(settings.probes.len() * comps.len());
    for &(x, t) in &settings.probes {
        for &c in comps {
            probe_values.push(grid.eval(c, x, t));
        }
    }
    let probe_sup = probe_values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    SweepEntry {
        eps,
        failure: None,
        summary: Some(SolveSummary::from_report(&report)),
        sup: grid_sup(&grid, comps),
        probe_values,
        probe_sup,
        derivative,
    }
}

/// Solves `spec` regularized with `mollifier` at every ε of `eps_grid` and fits
/// growth orders across ε.
///
/// Per-ε failures are recorded in the entries and the sweep continues.
pub fn epsilon_sweep(
    spec: &SystemSpec,
    mollifier: &Mollifier,
    eps_grid: &[f64],
    horizon: f64,
    settings: &SweepSettings,
) -> Result<SweepResult> {
    spec.validate()?;
    settings.solve.validate()?;
    check_eps_grid(eps_grid)?;
    let comps = settings.components(spec.n)?;
    let entries: Vec<SweepEntry> = eps_grid
        .par_iter()
        .map(|&eps| sweep_entry(spec, mollifier, eps, horizon, settings, &comps))
        .collect();
    let label = &spec.meta.label;
    let probe = settings.probe_label();
    let fit = |name: &str, vals: Vec<f64>, probe: String| {
        growth_report_from_sups(&format!("{label}: {name}"), eps_grid, &vals, (0, 0), probe, &settings.diagnostics)
    };
    let summary_field = |f: fn(&SolveSummary) -> f64| -> Vec<f64> {
        entries
            .iter()
            .map(|e| e.summary.as_ref().map_or(f64::NAN, f))
            .collect()
    };
    let solution_growth = fit("solution sup", entries.iter().map(|e| e.sup).collect(), "whole grid".into());
    let probe_growth = fit("probe sup", entries.iter().map(|e| e.probe_sup).collect(), probe);
    let q_growth = fit("q0", summary_field(|s| s.q0), "slab plan".into());
    let lipschitz_growth = fit("L_F", summary_field(|s| s.l_f), "Lipschitz box".into());
    Ok(SweepResult {
        label: label.clone(),
        eps_grid: eps_grid.to_vec(),
        probes: settings.probes.clone(),
        components: comps,
        entries,
        solution_growth,
        probe_growth,
        q_growth,
        lipschitz_growth,
    })
}

/// One ε of a uniqueness experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessEntry {
    pub eps: f64,
    pub failure: Option<Failure>,
    /// Sup over the probes of `|U_φ − U_ψ|`.
    #[serde(with = "nonfinite")]
    pub difference: f64,
    #[serde(with = "nonfinite")]
    pub sup_phi: f64,
    #[serde(with = "nonfinite")]
    pub sup_psi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessResult {
    pub label: String,
    pub eps_grid: Vec<f64>,
    pub probes: Vec<(f64, f64)>,
    pub entries: Vec<UniquenessEntry>,
    /// Fit of the difference; a decay shows as a negative fitted order.
    pub report: GrowthReport,
}

impl UniquenessResult {
    /// `−fitted order`, the rate at which the difference vanishes.
    pub fn decay_order(&self) -> f64 {
        -self.report.fitted_order
    }
}

/// Solves the problem with two mollifiers of the same class at every ε and fits
/// the decay of their difference at the probes.
///
/// Without probes the difference is taken over all grid nodes.
pub fn uniqueness_experiment(
    spec: &SystemSpec,
    phi: &Mollifier,
    psi: &Mollifier,
    eps_grid: &[f64],
    horizon: f64,
    settings: &SweepSettings,
) -> Result<UniquenessResult> {
    spec.validate()?;
    settings.solve.validate()?;
    check_eps_grid(eps_grid)?;
    if phi.q() != psi.q() {
        return Err(Error::InvalidArgument(format!(
            "mollifiers belong to different classes (q = {} and {})",
            phi.q(),
            psi.q()
        )));
    }
    for m in [phi, psi] {
        if !m.verify_moments().passed {
            return Err(Error::InvalidArgument(format!(
                "mollifier with radius {} fails its moment conditions",
                m.radius()
            )));
        }
    }
    let comps = settings.components(spec.n)?;
    let entries: Vec<UniquenessEntry> = eps_grid
        .par_iter()
        .map(|&eps| {
            let run = |m: &Mollifier| -> Result<SolutionGrid> {
                let sys = spec.freeze(Some(eps), Some(m))?;
                Ok(solve(&sys, horizon, &settings.solve)?.0)
            };
            let pair = run(phi).and_then(|a| run(psi).map(|b| (a, b)));
            match pair.and_then(|(a, b)| difference(&a, &b, &settings.probes, &comps).map(|d| (a, b, d))) {
                Ok((a, b, d)) => UniquenessEntry {
                    eps,
                    failure: None,
                    difference: d,
                    sup_phi: grid_sup(&a, &comps),
                    sup_psi: grid_sup(&b, &comps),
                },
                Err(e) => UniquenessEntry {
                    eps,
                    failure: Some(Failure::from(&e)),
                    difference: f64::NAN,
                    sup_phi: f64::NAN,
                    sup_psi: f64::NAN,
                },
            }
        })
        .collect();
    let diffs: Vec<f64> = entries.iter().map(|e| e.difference).collect();
    let probe = if settings.probes.is_empty() {
        "all grid nodes".to_string()
    } else {
        settings.probe_label()
    };
    let report = growth_report_from_sups(
        &format!("{}: mollifier difference", spec.meta.label),
        eps_grid,
        &diffs,
        (0, 0),
        probe,
        &settings.diagnostics,
    );
    Ok(UniquenessResult {
        label: spec.meta.label.clone(),
        eps_grid: eps_grid.to_vec(),
        probes: settings.probes.clone(),
        entries,
        report,
    })
}

fn difference(a: &SolutionGrid, b: &SolutionGrid, probes: &[(f64, f64)], comps: &[usize]) -> Result<f64> {
    let mut d = 0.0f64;
    if probes.is_empty() {
        if a.values.len() != b.values.len() || a.t_nodes != b.t_nodes {
            return Err(Error::InvalidArgument(
                "grids differ between mollifiers; give probe points".into(),
            ));
        }
        for g in 0..a.levels() {
            for &c in comps {
                for j in 0..a.x_nodes.len() {
                    d = d.max((a.get(g, c, j) - b.get(g, c, j)).abs());
                }
            }
        }
    } else {
        for &(x, t) in probes {
            for &c in comps {
                d = d.max((a.eval(c, x, t) - b.eval(c, x, t)).abs());
            }
        }
    }
    Ok(d)
}

/// Thresholds of the nonlinearity classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Relative RMS residual below which a model is accepted.
    pub threshold: f64,
    /// Residuals closer than this count as a tie.
    pub tie: f64,
    /// Required span of the radii in decades.
    pub min_decades: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            threshold: 0.02,
            tie: 1e-3,
            min_decades: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// `g(r) = a`.
    Constant,
    /// `g(r) = a + c (log(β + log(1 + r)))^{1/4}`.
    LoglogQuarter,
    /// `g(r) = a + c log(β + log(1 + r))`.
    Loglog,
}

/// Least-squares fit of one model to the sampled gradient sup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: GrowthModel,
    pub offset: f64,
    pub coefficient: f64,
    pub beta: f64,
    /// RMS residual relative to `max g`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum NonlinearityVerdict {
    Lipschitz { constant: f64 },
    Loglog { c_f: f64 },
    LoglogQuarter { c: f64 },
    NoneOfTheAbove { reason: String },
}

/// Growth class of `sup |∇F|` over boxes of increasing radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityClass {
    pub verdict: NonlinearityVerdict,
    /// Largest radius sampled.
    pub box_radius: f64,
    pub radii: Vec<f64>,
    pub samples: Vec<f64>,
    pub fits: Vec<ModelFit>,
    pub config: ClassifierConfig,
    /// Best-fit descriptor of the polynomial inside the logarithms.
    pub descriptor: Option<String>,
}

const BETA_POINTS: usize = 241;

fn fit_affine(basis: &[f64], g: &[f64], scale: f64) -> (f64, f64, f64) {
    let m = g.len() as f64;
    let mb = basis.iter().sum::<f64>() / m;
    let mg = g.iter().sum::<f64>() / m;
    let sbb: f64 = basis.iter().map(|b| (b - mb) * (b - mb)).sum();
    let sbg: f64 = basis.iter().zip(g).map(|(b, y)| (b - mb) * (y - mg)).sum();
    let c = if sbb > 0.0 { sbg / sbb } else { 0.0 };
    let a = mg - c * mb;
    let rss: f64 = basis.iter().zip(g).map(|(b, y)| (y - a - c * b).powi(2)).sum();
    (a, c, (rss / m).sqrt() / scale)
}

fn fit_model(model: GrowthModel, logs: &[f64], g: &[f64], scale: f64) -> ModelFit {
    if model == GrowthModel::Constant {
        let (a, _, r) = fit_affine(&vec![0.0; g.len()], g, scale);
        return ModelFit {
            model,
            offset: a,
            coefficient: 0.0,
            beta: f64::NAN,
            residual: r,
        };
    }
    // β ranges keep the basis real: the quarter power needs β + log(1 + r) ≥ 1.
    let (lo, hi): (f64, f64) = match model {
        GrowthModel::Loglog => (1e-3, 1e3),
        _ => (1.0, 1e3),
    };
    let mut best: Option<ModelFit> = None;
    for k in 0..BETA_POINTS {
        let beta = lo * (hi / lo).powf(k as f64 / (BETA_POINTS - 1) as f64);
        let basis: Vec<f64> = logs
            .iter()
            .map(|&l| {
                let v = (beta + l).ln();
                if model == GrowthModel::Loglog {
                    v
                } else {
                    v.max(0.0).powf(0.25)
                }
            })
            .collect();
        let (a, c, r) = fit_affine(&basis, g, scale);
        if c < 0.0 {
            continue;
        }
        if best.is_none_or(|b| r < b.residual) {
            best = Some(ModelFit {
                model,
                offset: a,
                coefficient: c,
                beta,
                residual: r,
            });
        }
    }
    best.unwrap_or(ModelFit {
        model,
        offset: f64::NAN,
        coefficient: f64::NAN,
        beta: f64::NAN,
        residual: f64::INFINITY,
    })
}

/// Classifies sampled values `g(r) = sup |∇F|` over the box of radius `r`.
///
/// Pure: the verdict depends only on the samples and the thresholds. Ties
/// go to the more restrictive class, in the order constant, quarter, loglog.
pub fn classify_samples(radii: &[f64], samples: &[f64], cfg: &ClassifierConfig) -> Result<NonlinearityClass> {
    if radii.len() != samples.len() || radii.len() < 3 {
        return Err(Error::InvalidArgument("need at least three radii with one sample each".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be positive and increasing".into()));
    }
    let span = (radii[radii.len() - 1] / radii[0]).log10();
    if span < cfg.min_decades - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "radii span {span:.2} decades, need {}",
            cfg.min_decades
        )));
    }
    let box_radius = radii[radii.len() - 1];
    let mut out = NonlinearityClass {
        verdict: NonlinearityVerdict::NoneOfTheAbove { reason: String::new() },
        box_radius,
        radii: radii.to_vec(),
        samples: samples.to_vec(),
        fits: Vec::new(),
        config: *cfg,
        descriptor: None,
    };
    if let Some(k) = samples.iter().position(|s| !s.is_finite()) {
        out.verdict = NonlinearityVerdict::NoneOfTheAbove {
            reason: format!("non-finite gradient sup at radius {}", radii[k]),
        };
        return Ok(out);
    }
    let scale = samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        out.verdict = NonlinearityVerdict::Lipschitz { constant: 0.0 };
        return Ok(out);
    }
    let logs: Vec<f64> = radii.iter().map(|r| r.ln_1p()).collect();
    out.fits = [GrowthModel::Constant, GrowthModel::LoglogQuarter, GrowthModel::Loglog]
        .into_iter()
        .map(|m| fit_model(m, &logs, samples, scale))
        .collect();
    let min = out.fits.iter().map(|f| f.residual).fold(f64::INFINITY, f64::min);
    if min > cfg.threshold {
        out.verdict = NonlinearityVerdict::NoneOfTheAbove {
            reason: format!(
                "best relative residual {min:.3e} exceeds {}; gradient sup grows from {:.3e} to {:.3e}",
                cfg.threshold, samples[0], scale
            ),
        };
        return Ok(out);
    }
    let chosen = out
        .fits
        .iter()
        .find(|f| f.residual <= min + cfg.tie)
        .copied()
        .expect("minimum is attained");
    out.verdict = match chosen.model {
        GrowthModel::Constant => NonlinearityVerdict::Lipschitz { constant: scale },
        GrowthModel::LoglogQuarter => NonlinearityVerdict::LoglogQuarter { c: chosen.coefficient },
        GrowthModel::Loglog => NonlinearityVerdict::Loglog { c_f: chosen.coefficient },
    };
    if chosen.model != GrowthModel::Constant {
        out.descriptor = Some(format!("log D(r) proportional to {:.4} + log(1 + r)", chosen.beta));
    }
    Ok(out)
}

/// Samples `grad_sup` at every radius and classifies the result.
pub fn classify_nonlinearity(
    radii: &[f64],
    grad_sup: impl Fn(f64) -> Result<f64>,
    cfg: &ClassifierConfig,
) -> Result<NonlinearityClass> {
    let samples = radii.iter().map(|&r| grad_sup(r)).collect::<Result<Vec<_>>>()?;
    classify_samples(radii, &samples, cfg)
}

/// Classifies the source of `sys` from sampled Lipschitz estimates.
pub fn classify_system(
    sys: &FrozenSystem,
    horizon: f64,
    radii: &[f64],
    cfg: &ClassifierConfig,
) -> Result<NonlinearityClass> {
    classify_nonlinearity(radii, |r| Ok(estimate_lipschitz(sys, horizon, r)?.raw_l_f), cfg)
}

/// One row of the estimate verification table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheck {
    #[serde(with = "nonfinite")]
    pub eps: f64,
    pub converged: bool,
    pub contraction_ok: bool,
    #[serde(with = "nonfinite")]
    pub apriori_bound: f64,
    #[serde(with = "nonfinite")]
    pub sup_achieved: f64,
    pub apriori_ok: bool,
    pub derivative: Option<DerivativeCheck>,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub label: String,
    pub rows: Vec<EstimateCheck>,
    pub passed: bool,
}

/// Checks one solution: contraction, the a priori bound and, when the
/// derivative was solved, the derivative bound.
pub fn verify_solution(
    sys: &FrozenSystem,
    grid: &SolutionGrid,
    report: &SolveReport,
) -> Result<EstimateCheck> {
    let summary = SolveSummary::from_report(report);
    let derivative = if grid.derivative.is_some() {
        Some(check_derivative_bound(sys, grid, report)?)
    } else {
        None
    };
    Ok(row(sys.meta.epsilon.unwrap_or(f64::NAN), Some(&summary), derivative, None))
}

fn row(eps: f64, s: Option<&SolveSummary>, derivative: Option<DerivativeCheck>, failure: Option<&Failure>) -> EstimateCheck {
    match s {
        Some(s) => {
            let d_ok = derivative.as_ref().is_none_or(|d| d.satisfied);
            EstimateCheck {
                eps,
                converged: true,
                contraction_ok: s.contraction_ok,
                apriori_bound: s.apriori_bound,
                sup_achieved: s.sup_achieved,
                apriori_ok: s.bound_satisfied,
                passed: s.contraction_ok && s.bound_satisfied && d_ok,
                derivative,
                note: None,
            }
        }
        None => EstimateCheck {
            eps,
            converged: false,
            contraction_ok: false,
            apriori_bound: f64::NAN,
            sup_achieved: f64::NAN,
            apriori_ok: false,
            derivative: None,
            passed: false,
            note: failure.map(|f| format!("{}: {}", f.code, f.message)),
        },
    }
}

/// Pass/fail table over the entries of a sweep; failed solves fail their row.
pub fn verify_estimates(sweep: &SweepResult) -> VerificationReport {
    let rows: Vec<EstimateCheck> = sweep
        .entries
        .iter()
        .map(|e| row(e.eps, e.summary.as_ref(), e.derivative.clone(), e.failure.as_ref()))
        .collect();
    VerificationReport {
        label: sweep.label.clone(),
        passed: !rows.is_empty() && rows.iter().all(|r| r.passed),
        rows,
    }
}
