//! ε-indexed function families and numerical growth diagnostics.
//!
//! Sup-norms are taken over a uniform probe lattice on a compact set, refined
//! locally around the lattice extremum, and fitted as `log10 sup` against
//! `log10(1/ε)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{ols, theil_sen, LineFit};
use crate::numfmt::{nonfinite, nonfinite_vec};

/// An interval or a rectangle in `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { x: (f64, f64), t: (f64, f64) },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    fn axes(&self) -> Vec<(f64, f64)> {
        match *self {
            Domain::Interval { a, b } => vec![(a, b)],
            Domain::Rectangle { x, t } => vec![x, t],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::Interval { a, b } => format!("[{a}, {b}]"),
            Domain::Rectangle { x, t } => format!("[{}, {}] x [{}, {}]", x.0, x.1, t.0, t.1),
        }
    }
}

pub type FamilyFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A representative `u(φ_ε, ·)`: a deterministic map `(ε, point) ↦ value`.
#[derive(Clone)]
pub struct RepFamily {
    pub label: String,
    pub domain: Domain,
    eval: FamilyFn,
}

impl fmt::Debug for RepFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RepFamily")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .finish()
    }
}

impl RepFamily {
    pub fn new(label: impl Into<String>, domain: Domain, eval: FamilyFn) -> Self {
        Self {
            label: label.into(),
            domain,
            eval,
        }
    }

    pub fn interval(
        label: impl Into<String>,
        a: f64,
        b: f64,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, Domain::Interval { a, b }, Arc::new(move |e, p| f(e, p[0])))
    }

    pub fn rectangle(
        label: impl Into<String>,
        x: (f64, f64),
        t: (f64, f64),
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, Domain::Rectangle { x, t }, Arc::new(move |e, p| f(e, p[0], p[1])))
    }

    pub fn eval(&self, eps: f64, point: &[f64]) -> f64 {
        (self.eval)(eps, point)
    }

    /// `f − g`, pointwise.
    pub fn difference(f: &RepFamily, g: &RepFamily) -> Result<RepFamily> {
        if f.domain != g.domain {
            return Err(Error::InvalidArgument(format!(
                "families '{}' and '{}' live on different domains",
                f.label, g.label
            )));
        }
        let (a, b) = (f.eval.clone(), g.eval.clone());
        Ok(RepFamily::new(
            format!("{} - {}", f.label, g.label),
            f.domain,
            Arc::new(move |e, p| a(e, p) - b(e, p)),
        ))
    }

    /// Mixed derivative `∂^α` by centered differences with step `h`.
    fn derivative(&self, eps: f64, point: &[f64], alpha: (usize, usize), h: f64) -> f64 {
        let (a1, a2) = alpha;
        if a1 == 0 && a2 == 0 {
            return self.eval(eps, point);
        }
        let mut acc = 0.0;
        let mut p = point.to_vec();
        for j in 0..=a1 {
            let cj = signed_binomial(a1, j);
            for k in 0..=a2 {
                let ck = signed_binomial(a2, k);
                p[0] = point[0] + (a1 as f64 / 2.0 - j as f64) * h;
                if a2 > 0 {
                    p[1] = point[1] + (a2 as f64 / 2.0 - k as f64) * h;
                }
                acc += cj * ck * self.eval(eps, &p);
            }
        }
        acc / h.powi((a1 + a2) as i32)
    }
}

fn signed_binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    if k % 2 == 0 {
        r
    } else {
        -r
    }
}

/// Thresholds and lattice settings for growth diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub lattice_points: usize,
    pub residual_threshold: f64,
    /// Fitted orders below this are reported as negligible-like.
    pub negligible_below: f64,
    pub min_points: usize,
    pub min_decades: f64,
    /// Median-of-slopes instead of least squares.
    pub robust: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            lattice_points: 201,
            residual_threshold: 0.3,
            negligible_below: -0.5,
            min_points: 5,
            min_decades: 2.0,
            robust: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Moderate {
        order: f64,
    },
    NegligibleLike {
        #[serde(with = "nonfinite")]
        decay_order: f64,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub label: String,
    pub eps_grid: Vec<f64>,
    #[serde(with = "nonfinite_vec")]
    pub sup_norms: Vec<f64>,
    #[serde(with = "nonfinite")]
    pub fitted_order: f64,
    #[serde(with = "nonfinite")]
    pub intercept: f64,
    #[serde(with = "nonfinite")]
    pub residual: f64,
    /// Number of leading grid points used by the fit.
    pub usable_points: usize,
    pub verdict: Verdict,
    pub derivative: (usize, usize),
    pub probe: String,
}

/// Validates an ε grid: strictly decreasing, in `(0, 1]`, enough points and decades.
pub fn check_grid(grid: &[f64], cfg: &DiagnosticsConfig) -> Result<()> {
    if grid.len() < cfg.min_points {
        return Err(Error::InvalidArgument(format!(
            "epsilon grid needs at least {} points, got {}",
            cfg.min_points,
            grid.len()
        )));
    }
    if grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidArgument("epsilon grid values must lie in (0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("epsilon grid must be strictly decreasing".into()));
    }
    let span = (grid[0] / grid[grid.len() - 1]).log10();
    if span < cfg.min_decades - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "epsilon grid spans {span:.3} decades, need {}",
            cfg.min_decades
        )));
    }
    Ok(())
}

/// Geometric grid from `start` down to `stop` with `count` points.
pub fn geometric_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let r = (stop / start).ln() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                stop
            } else {
                start * (r * i as f64).exp()
            }
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Extremum {
    Max,
    Min,
}

/// Max (or min) of `|g|` over a lattice on `k`, refined around the best lattice point.
fn extremum_abs(g: &dyn Fn(&[f64]) -> f64, k: &Domain, points: usize, which: Extremum) -> f64 {
    let axes = k.axes();
    let better = |a: f64, b: f64| match which {
        Extremum::Max => a > b || (b.is_nan() && !a.is_nan()),
        Extremum::Min => a < b || (b.is_nan() && !a.is_nan()),
    };
    let mut best = match which {
        Extremum::Max => f64::NEG_INFINITY,
        Extremum::Min => f64::INFINITY,
    };
    let mut best_pt = vec![0.0; axes.len()];
    let mut any_nan = false;
    let mut scan = |lo: &[f64], hi: &[f64], m: usize, best: &mut f64, best_pt: &mut Vec<f64>| {
        let mut idx = vec![0usize; lo.len()];
        let mut p = vec![0.0; lo.len()];
        loop {
            for d in 0..lo.len() {
                p[d] = if m == 1 {
                    0.5 * (lo[d] + hi[d])
                } else {
                    lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / (m - 1) as f64
                };
            }
            let v = g(&p).abs();
            if v.is_nan() {
                any_nan = true;
            } else if better(v, *best) {
                *best = v;
                best_pt.clone_from(&p);
            }
            let mut d = 0;
            loop {
                if d == lo.len() {
                    return;
                }
                idx[d] += 1;
                if idx[d] < m {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    };
    let lo: Vec<f64> = axes.iter().map(|a| a.0).collect();
    let hi: Vec<f64> = axes.iter().map(|a| a.1).collect();
    scan(&lo, &hi, points.max(2), &mut best, &mut best_pt);
    let mut cell: Vec<f64> = axes
        .iter()
        .map(|a| (a.1 - a.0) / (points.max(2) - 1) as f64)
        .collect();
    for _ in 0..3 {
        let center = best_pt.clone();
        let l: Vec<f64> = (0..axes.len())
            .map(|d| (center[d] - cell[d]).max(axes[d].0))
            .collect();
        let h: Vec<f64> = (0..axes.len())
            .map(|d| (center[d] + cell[d]).min(axes[d].1))
            .collect();
        scan(&l, &h, 11, &mut best, &mut best_pt);
        for c in cell.iter_mut() {
            *c /= 5.0;
        }
    }
    if any_nan {
        f64::NAN
    } else {
        best
    }
}

/// Sup-norm of `∂^α f(ε, ·)` over `k`, with derivative step `ε/10`.
pub fn sup_norm(f: &RepFamily, k: &Domain, eps: f64, alpha: (usize, usize), points: usize) -> f64 {
    let h = eps / 10.0;
    extremum_abs(&|p| f.derivative(eps, p, alpha, h), k, points, Extremum::Max)
}

/// Infimum of `|f(ε, ·)|` over `k`.
pub fn inf_norm(f: &RepFamily, k: &Domain, eps: f64, points: usize) -> f64 {
    extremum_abs(&|p| f.eval(eps, p), k, points, Extremum::Min)
}

/// Fits precomputed sup-norms against the grid and assigns a verdict.
pub fn growth_report_from_sups(
    label: &str,
    grid: &[f64],
    sups: &[f64],
    alpha: (usize, usize),
    probe: String,
    cfg: &DiagnosticsConfig,
) -> GrowthReport {
    let usable = sups.iter().take_while(|s| s.is_finite()).count();
    let mut report = GrowthReport {
        label: label.to_string(),
        eps_grid: grid.to_vec(),
        sup_norms: sups.to_vec(),
        fitted_order: f64::NAN,
        intercept: f64::NAN,
        residual: f64::NAN,
        usable_points: usable,
        verdict: Verdict::Inconclusive {
            reason: String::new(),
        },
        derivative: alpha,
        probe,
    };
    if usable == grid.len() && sups.iter().all(|&s| s == 0.0) {
        report.fitted_order = f64::NEG_INFINITY;
        report.residual = 0.0;
        report.verdict = Verdict::NegligibleLike {
            decay_order: f64::INFINITY,
        };
        return report;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = grid[..usable]
        .iter()
        .zip(&sups[..usable])
        .filter(|(_, &s)| s > 0.0)
        .map(|(&e, &s)| (-e.log10(), s.log10()))
        .unzip();
    let fit: Option<LineFit> = if x.len() >= cfg.min_points {
        if cfg.robust {
            theil_sen(&x, &y)
        } else {
            ols(&x, &y)
        }
    } else {
        None
    };
    let Some(fit) = fit else {
        report.verdict = Verdict::Inconclusive {
            reason: format!(
                "only {} usable positive sup-norms, need {}",
                x.len(),
                cfg.min_points
            ),
        };
        return report;
    };
    report.fitted_order = fit.slope;
    report.intercept = fit.intercept;
    report.residual = fit.residual;
    report.verdict = if usable < grid.len() {
        Verdict::Inconclusive {
            reason: format!(
                "non-finite sup-norm at eps = {:e}; fitted on the first {usable} points",
                grid[usable]
            ),
        }
    } else if x.len() < usable {
        Verdict::Inconclusive {
            reason: "some sup-norms vanish exactly while others do not".into(),
        }
    } else if fit.residual >= cfg.residual_threshold {
        Verdict::Inconclusive {
            reason: format!("fit residual {:.3} exceeds {}", fit.residual, cfg.residual_threshold),
        }
    } else if fit.slope < cfg.negligible_below {
        Verdict::NegligibleLike {
            decay_order: -fit.slope,
        }
    } else {
        Verdict::Moderate { order: fit.slope }
    };
    report
}

/// Fits `log10 sup_K |∂^α f(ε, ·)|` against `log10(1/ε)`.
pub fn estimate_growth_order(
    f: &RepFamily,
    k: &Domain,
    grid: &[f64],
    alpha: (usize, usize),
    cfg: &DiagnosticsConfig,
) -> Result<GrowthReport> {
    check_grid(grid, cfg)?;
    if k.dim() != f.domain.dim() {
        return Err(Error::InvalidArgument("probe compact and family dimension differ".into()));
    }
    let sups: Vec<f64> = grid
        .par_iter()
        .map(|&e| sup_norm(f, k, e, alpha, cfg.lattice_points))
        .collect();
    let probe = format!(
        "{} lattice of {} points per axis, 3 refinement passes",
        k.describe(),
        cfg.lattice_points
    );
    Ok(growth_report_from_sups(&f.label, grid, &sups, alpha, probe, cfg))
}

/// Growth report of `|f − g|`.
pub fn negligibility_order(
    f: &RepFamily,
    g: &RepFamily,
    k: &Domain,
    grid: &[f64],
    cfg: &DiagnosticsConfig,
) -> Result<GrowthReport> {
    let d = RepFamily::difference(f, g)?;
    estimate_growth_order(&d, k, grid, (0, 0), cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertibilityReport {
    pub invertible: bool,
    /// Fitted `p` in `inf_K |u_ε| ≈ C ε^p`.
    pub p: Option<f64>,
    #[serde(with = "nonfinite_vec")]
    pub infima: Vec<f64>,
    pub reason: String,
}

/// Infimum below this counts as zero.
const ZERO_INF: f64 = 1e-300;

/// Tests `inf_K |u_ε| ≥ ε^p` for some `p`.
pub fn check_invertibility(
    f: &RepFamily,
    k: &Domain,
    grid: &[f64],
    cfg: &DiagnosticsConfig,
) -> Result<InvertibilityReport> {
    check_grid(grid, cfg)?;
    let infima: Vec<f64> = grid
        .par_iter()
        .map(|&e| inf_norm(f, k, e, cfg.lattice_points))
        .collect();
    if let Some(i) = infima.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: f.label.clone(),
            at: format!("eps = {:e}", grid[i]),
        });
    }
    if let Some(i) = infima.iter().position(|&v| v < ZERO_INF) {
        return Ok(InvertibilityReport {
            invertible: false,
            p: None,
            reason: format!("infimum vanishes at eps = {:e}", grid[i]),
            infima,
        });
    }
    let x: Vec<f64> = grid.iter().map(|e| e.log10()).collect();
    let y: Vec<f64> = infima.iter().map(|v| v.log10()).collect();
    let whole = ols(&x, &y).expect("grid validated");
    let half = x.len() / 2;
    let upper = ols(&x[..=half], &y[..=half]);
    let lower = ols(&x[half..], &y[half..]);
    if let (Some(u), Some(l)) = (upper, lower) {
        if l.slope > u.slope + 1.0 {
            return Ok(InvertibilityReport {
                invertible: false,
                p: Some(whole.slope),
                reason: format!(
                    "decay steepens from order {:.3} to {:.3}: faster than any fixed power",
                    u.slope, l.slope
                ),
                infima,
            });
        }
    }
    Ok(InvertibilityReport {
        invertible: true,
        p: Some(whole.slope),
        reason: "infimum decays at most polynomially".into(),
        infima,
    })
}

/// A growth scale `γ(ε)`.
#[derive(Clone)]
pub struct GammaSpec {
    pub name: String,
    pub gamma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for GammaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GammaSpec").field("name", &self.name).finish()
    }
}

impl GammaSpec {
    pub fn new(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            gamma: Arc::new(g),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant {c}"), move |_| c)
    }

    /// `(log log 1/ε)^{1/4}`.
    pub fn loglog_quarter() -> Self {
        Self::new("(log log 1/eps)^(1/4)", |e: f64| (1.0 / e).ln().ln().powf(0.25))
    }

    /// `ε^{−p}`.
    pub fn power(p: f64) -> Self {
        Self::new(format!("eps^(-{p})"), move |e: f64| e.powf(-p))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaVerdict {
    pub n: u32,
    pub admissible: bool,
    pub overflow: bool,
    /// `ln r(ε)` over the grid, `r = ε γ^{γ^N}`.
    #[serde(with = "nonfinite_vec")]
    pub log_r: Vec<f64>,
    #[serde(with = "nonfinite")]
    pub max_upper: f64,
    #[serde(with = "nonfinite")]
    pub max_lower: f64,
}

/// Checks `ε γ(ε)^{γ(ε)^N}` stays bounded over the grid for `N = 1..=n_max`.
///
/// Work is done in log space; a non-finite `ln r` is a tower overflow. The
/// expression counts as bounded when its maximum over the smaller-ε half of the
/// grid exceeds the maximum over the larger-ε half by at most a factor 10.
pub fn check_gamma_admissible(g: &GammaSpec, n_max: u32, grid: &[f64]) -> Result<Vec<GammaVerdict>> {
    if grid.len() < 4 {
        return Err(Error::InvalidArgument("gamma grid needs at least 4 points".into()));
    }
    let smallest = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "gamma admissibility grid must reach eps <= 1e-8, smallest is {smallest:e}"
        )));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("epsilon grid must be strictly decreasing".into()));
    }
    let gammas: Vec<f64> = grid.iter().map(|&e| (g.gamma)(e)).collect();
    if let Some(i) = gammas.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "gamma '{}' is not positive and finite at eps = {:e}",
            g.name, grid[i]
        )));
    }
    let half = grid.len() / 2;
    Ok((1..=n_max)
        .map(|n| {
            let log_r: Vec<f64> = grid
                .iter()
                .zip(&gammas)
                .map(|(&e, &gm)| {
                    let ln_g = gm.ln();
                    let tower = (n as f64 * ln_g).exp();
                    e.ln() + tower * ln_g
                })
                .collect();
            let overflow = log_r.iter().any(|v| !v.is_finite());
            let max_upper = log_r[..half].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let max_lower = log_r[half..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let admissible = !overflow && max_lower <= max_upper + std::f64::consts::LN_10;
            GammaVerdict {
                n,
                admissible,
                overflow,
                log_r,
                max_upper,
                max_lower,
            }
        })
        .collect())
}
