//! Moment-vanishing mollifiers and regularization of singular data.
//!
//! A mollifier of class `A_q` is built as `ψ(s) = P(s²) b(s)` on `(−1, 1)` with
//! the bump `b(s) = exp(−1/(1 − s²))`; the even polynomial `P` is chosen so that
//! `ψ` has unit mass and vanishing moments of order `1..=q`. The physical kernel
//! is `φ(x) = ψ(x/R)/R`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::CompositeRule;

pub const MASS_TOL: f64 = 1e-10;
pub const MOMENT_TOL: f64 = 1e-8;

const PANELS: usize = 16;
const START_ORDER: usize = 16;
const MAX_ORDER: usize = 128;
/// Highest derivative order precomputed for the bump.
const MAX_DERIVATIVE: usize = 8;

pub type SmoothFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Kernel `φ ∈ A_q` supported on `[−R, R]`.
#[derive(Clone)]
pub struct Mollifier {
    q: usize,
    radius: f64,
    quadrature_order: usize,
    /// Polynomial correction in powers of `s`, dense (odd entries are zero).
    poly: Vec<f64>,
    /// `Q_p` numerators of the bump derivatives, `b^(p) = b Q_p / (1 − s²)^(2p)`.
    bump_numerators: Vec<Vec<f64>>,
    /// Convolution nodes on `(−1, 1)`: `(s, w ψ(s), w ψ'(s))`.
    conv: Vec<(f64, f64, f64)>,
    /// Mass of `ψ` left of each panel boundary of the construction rule.
    panel_mass: Vec<f64>,
    rule: CompositeRule,
}

impl fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mollifier")
            .field("q", &self.q)
            .field("radius", &self.radius)
            .field("quadrature_order", &self.quadrature_order)
            .field("poly", &self.poly)
            .finish()
    }
}

/// Moments of a mollifier checked with an independent, finer rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentReport {
    pub q: usize,
    pub radius: f64,
    pub quadrature_order: usize,
    /// `moments[k] = ∫ x^k φ dx` for `k = 0..=q+1`.
    pub moments: Vec<f64>,
    pub mass_error: f64,
    pub max_moment_error: f64,
    pub passed: bool,
}

fn bump(s: f64) -> f64 {
    let w = 1.0 - s * s;
    if w <= 0.0 {
        0.0
    } else {
        (-1.0 / w).exp()
    }
}

fn poly_eval(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, &a)| a * j as f64)
        .collect()
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, v) in a.iter().enumerate() {
        out[i] += v;
    }
    for (i, v) in b.iter().enumerate() {
        out[i] += v;
    }
    out
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `Q_{m+1} = −2s Q_m + (1 − s²)² Q_m' + 4m s (1 − s²) Q_m`.
fn bump_numerators(max_p: usize) -> Vec<Vec<f64>> {
    let w = [1.0, 0.0, -1.0];
    let w2 = poly_mul(&w, &w);
    let mut out = vec![vec![1.0]];
    for m in 0..max_p {
        let q = &out[m];
        let a = poly_mul(&[0.0, -2.0], q);
        let b = poly_mul(&w2, &poly_derivative(q));
        let c = poly_mul(&poly_mul(&[0.0, 4.0 * m as f64], &w), q);
        out.push(poly_add(&poly_add(&a, &b), &c));
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

impl Mollifier {
    /// Builds `φ ∈ A_q` with support radius `R`.
    ///
    /// The moment system is solved with a composite Gauss–Legendre rule and
    /// re-checked with a rule of twice the order; on failure the order is doubled.
    pub fn build(q: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mollifier radius must be positive, got {radius}"
            )));
        }
        let mut order = START_ORDER;
        loop {
            if let Some(m) = Self::try_build(q, radius, order) {
                if m.verify_moments().passed {
                    return Ok(m);
                }
            }
            if order >= MAX_ORDER {
                return Err(Error::SingularMomentSystem { q, order });
            }
            order *= 2;
        }
    }

    fn try_build(q: usize, radius: f64, order: usize) -> Option<Self> {
        let rule = CompositeRule::new(order, PANELS);
        let pts = rule.points(-1.0, 1.0);
        let j_max = q / 2;
        let mu = |m: usize| -> f64 { pts.iter().map(|&(s, w)| w * s.powi(m as i32) * bump(s)).sum() };
        let dim = j_max + 1;
        let moments: Vec<f64> = (0..2 * dim).map(|m| mu(2 * m)).collect();
        let a = DMatrix::from_fn(dim, dim, |i, j| moments[i + j]);
        let mut rhs = DVector::zeros(dim);
        rhs[0] = 1.0;
        let c = a.lu().solve(&rhs)?;
        if c.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut poly = vec![0.0; 2 * j_max + 1];
        for (j, v) in c.iter().enumerate() {
            poly[2 * j] = *v;
        }
        let mut m = Mollifier {
            q,
            radius,
            quadrature_order: order,
            poly,
            bump_numerators: bump_numerators(MAX_DERIVATIVE),
            conv: Vec::new(),
            panel_mass: Vec::new(),
            rule,
        };
        m.conv = pts
            .iter()
            .map(|&(s, w)| (s, w * m.profile(s, 0), w * m.profile(s, 1)))
            .filter(|&(_, a, b)| a != 0.0 || b != 0.0)
            .collect();
        let mut acc = 0.0;
        m.panel_mass.push(0.0);
        for chunk in pts.chunks(order) {
            acc += chunk.iter().map(|&(s, w)| w * m.profile(s, 0)).sum::<f64>();
            m.panel_mass.push(acc);
        }
        Some(m)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    /// Coefficients of the even polynomial correction, in powers of `s = x/R`.
    pub fn correction(&self) -> &[f64] {
        &self.poly
    }

    /// `p`-th derivative of the unit-radius profile `ψ` at `s`.
    pub fn profile(&self, s: f64, p: usize) -> f64 {
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - s * s;
        let b = (-1.0 / w).exp();
        if b == 0.0 {
            return 0.0;
        }
        if p == 0 {
            return poly_eval(&self.poly, s) * b;
        }
        let mut dpoly = self.poly.clone();
        let mut acc = 0.0;
        for a in 0..=p {
            // Leibniz: C(p, a) P^(a) b^(p−a)
            let bp = self.bump_derivative(s, w, b, p - a);
            acc += binomial(p, a) * poly_eval(&dpoly, s) * bp;
            dpoly = poly_derivative(&dpoly);
        }
        acc
    }

    fn bump_derivative(&self, s: f64, w: f64, b: f64, p: usize) -> f64 {
        if p == 0 {
            return b;
        }
        let qp = if p < self.bump_numerators.len() {
            poly_eval(&self.bump_numerators[p], s)
        } else {
            poly_eval(&bump_numerators(p)[p], s)
        };
        b * qp / w.powi(2 * p as i32)
    }

    /// `φ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.profile(x / self.radius, 0) / self.radius
    }

    /// `φ^(m)(x)`, evaluated analytically.
    pub fn derivative(&self, x: f64, m: usize) -> f64 {
        self.profile(x / self.radius, m) / self.radius.powi(1 + m as i32)
    }

    /// `∫_{−∞}^x φ`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let s = x / self.radius;
        if s <= -1.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        // Whole panels of the construction rule, then a partial panel, so
        // that the total mass agrees with the construction to rounding.
        let width = 2.0 / PANELS as f64;
        let p = (((s + 1.0) / width).floor() as usize).min(PANELS - 1);
        let lo = -1.0 + width * p as f64;
        self.panel_mass[p] + self.rule.base().integrate(lo, s, |u| self.profile(u, 0))
    }

    /// Scaled kernel `φ_ε(x) = φ(x/ε)/ε`.
    pub fn scale(&self, eps: f64) -> Result<Scaled<'_>> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        Ok(Scaled { base: self, eps })
    }

    /// Moments `∫ x^k φ dx`, `k = 0..=q+1`, with a rule of twice the construction order.
    pub fn verify_moments(&self) -> MomentReport {
        let check = CompositeRule::new(2 * self.quadrature_order, PANELS);
        let pts = check.points(-1.0, 1.0);
        let moments: Vec<f64> = (0..=self.q + 1)
            .map(|k| {
                let m: f64 = pts
                    .iter()
                    .map(|&(s, w)| w * s.powi(k as i32) * self.profile(s, 0))
                    .sum();
                m * self.radius.powi(k as i32)
            })
            .collect();
        let mass_error = (moments[0] - 1.0).abs();
        let max_moment_error = moments[1..=self.q]
            .iter()
            .fold(0.0f64, |a, &m| a.max(m.abs()));
        MomentReport {
            q: self.q,
            radius: self.radius,
            quadrature_order: self.quadrature_order,
            moments,
            mass_error,
            max_moment_error,
            passed: mass_error <= MASS_TOL && max_moment_error <= MOMENT_TOL,
        }
    }

    /// `(f * φ_ε)(x)` and its derivative, by the construction rule in `s`.
    pub fn convolve(&self, f: &dyn Fn(f64) -> f64, eps: f64, x: f64) -> (f64, f64) {
        let h = eps * self.radius;
        let mut v = 0.0;
        let mut d = 0.0;
        for &(s, wp, wd) in &self.conv {
            let fx = f(x - h * s);
            v += wp * fx;
            d += wd * fx;
        }
        (v, d / h)
    }

    /// Regularizes `datum` at `ε`, requiring every singular location to stay
    /// `εR` away from the ends of `domain`.
    pub fn regularize(&self, datum: &SingularDatum, eps: f64, domain: (f64, f64)) -> Result<Regularized> {
        self.scale(eps)?;
        datum.check_support(eps * self.radius, domain)?;
        Ok(Regularized {
            datum: datum.clone(),
            kernel: Some((Arc::new(self.clone()), eps)),
        })
    }
}

/// `φ_ε` borrowed from its base mollifier.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<'a> {
    base: &'a Mollifier,
    eps: f64,
}

impl Scaled<'_> {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn support_radius(&self) -> f64 {
        self.eps * self.base.radius
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.base.eval(x / self.eps) / self.eps
    }

    /// `φ_ε^(m)(x) = ε^(−1−m) φ^(m)(x/ε)`.
    pub fn derivative(&self, x: f64, m: usize) -> f64 {
        self.base.derivative(x / self.eps, m) / self.eps.powi(1 + m as i32)
    }

    pub fn antiderivative(&self, x: f64) -> f64 {
        self.base.antiderivative(x / self.eps)
    }
}

/// Tensor mollifier `φ(x, t) = φ₀(x) φ₀(t)`.
#[derive(Debug, Clone)]
pub struct Mollifier2D {
    pub factor: Mollifier,
}

impl Mollifier2D {
    pub fn new(factor: Mollifier) -> Self {
        Self { factor }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.factor.eval(x) * self.factor.eval(t)
    }

    pub fn eval_scaled(&self, eps: f64, x: f64, t: f64) -> f64 {
        let s = Scaled { base: &self.factor, eps };
        s.eval(x) * s.eval(t)
    }
}

/// Catalog of initial data, smooth or singular.
#[derive(Clone)]
pub enum SingularDatum {
    Smooth(SmoothFn),
    Dirac { location: f64, weight: f64 },
    DiracDerivative { location: f64, weight: f64, order: usize },
    Heaviside { location: f64, left: f64, right: f64 },
    Sum(Vec<SingularDatum>),
}

impl fmt::Debug for SingularDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularDatum::Smooth(_) => write!(f, "Smooth(..)"),
            SingularDatum::Dirac { location, weight } => {
                write!(f, "Dirac({location}, {weight})")
            }
            SingularDatum::DiracDerivative { location, weight, order } => {
                write!(f, "DiracDerivative({location}, {weight}, {order})")
            }
            SingularDatum::Heaviside { location, left, right } => {
                write!(f, "Heaviside({location}, {left}, {right})")
            }
            SingularDatum::Sum(items) => f.debug_list().entries(items).finish(),
        }
    }
}

impl SingularDatum {
    pub fn smooth(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SingularDatum::Smooth(Arc::new(f))
    }

    pub fn is_singular(&self) -> bool {
        match self {
            SingularDatum::Smooth(_) => false,
            SingularDatum::Sum(items) => items.iter().any(|d| d.is_singular()),
            _ => true,
        }
    }

    /// Locations of all singular parts.
    pub fn locations(&self) -> Vec<f64> {
        match self {
            SingularDatum::Smooth(_) => Vec::new(),
            SingularDatum::Dirac { location, .. }
            | SingularDatum::DiracDerivative { location, .. }
            | SingularDatum::Heaviside { location, .. } => vec![*location],
            SingularDatum::Sum(items) => items.iter().flat_map(|d| d.locations()).collect(),
        }
    }

    fn check_support(&self, margin: f64, domain: (f64, f64)) -> Result<()> {
        for x0 in self.locations() {
            if !(x0 - margin > domain.0 && x0 + margin < domain.1) {
                return Err(Error::SupportOverflow { location: x0, margin });
            }
        }
        Ok(())
    }

    fn value(&self, kernel: &Option<(Arc<Mollifier>, f64)>, x: f64) -> (f64, f64) {
        match (self, kernel) {
            (SingularDatum::Smooth(f), None) => {
                let h = 1e-6 * x.abs().max(1.0);
                (f(x), (f(x + h) - f(x - h)) / (2.0 * h))
            }
            (SingularDatum::Smooth(f), Some((m, eps))) => m.convolve(f.as_ref(), *eps, x),
            (SingularDatum::Sum(items), _) => items.iter().fold((0.0, 0.0), |acc, d| {
                let (v, p) = d.value(kernel, x);
                (acc.0 + v, acc.1 + p)
            }),
            (_, None) => (f64::NAN, f64::NAN),
            (SingularDatum::Dirac { location, weight }, Some((m, eps))) => {
                let s = Scaled { base: m, eps: *eps };
                (weight * s.eval(x - location), weight * s.derivative(x - location, 1))
            }
            (SingularDatum::DiracDerivative { location, weight, order }, Some((m, eps))) => {
                let s = Scaled { base: m, eps: *eps };
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                (
                    sign * weight * s.derivative(x - location, *order),
                    sign * weight * s.derivative(x - location, order + 1),
                )
            }
            (SingularDatum::Heaviside { location, left, right }, Some((m, eps))) => {
                let s = Scaled { base: m, eps: *eps };
                let jump = right - left;
                (
                    left + jump * s.antiderivative(x - location),
                    jump * s.eval(x - location),
                )
            }
        }
    }
}

/// A datum together with the kernel it is convolved with.
#[derive(Clone, Debug)]
pub struct Regularized {
    datum: SingularDatum,
    kernel: Option<(Arc<Mollifier>, f64)>,
}

impl Regularized {
    /// Smooth data used as is; fails on singular data.
    pub fn unregularized(datum: SingularDatum) -> Result<Self> {
        if datum.is_singular() {
            return Err(Error::InvalidArgument(
                "singular data needs a mollifier and an epsilon".into(),
            ));
        }
        Ok(Self { datum, kernel: None })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.datum.value(&self.kernel, x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.datum.value(&self.kernel, x).1
    }

    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        self.datum.value(&self.kernel, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivative_matches_finite_difference() {
        let m = Mollifier::build(2, 1.0).unwrap();
        for &s in &[-0.7, -0.2, 0.0, 0.35, 0.8] {
            for p in 0..4 {
                let h = 1e-5;
                let fd = (m.profile(s + h, p) - m.profile(s - h, p)) / (2.0 * h);
                let an = m.profile(s, p + 1);
                assert!((fd - an).abs() < 1e-5 * an.abs().max(1.0), "s={s} p={p}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn zero_outside_support() {
        let m = Mollifier::build(4, 0.5).unwrap();
        for &x in &[-0.5, 0.5, 0.7, -3.0] {
            assert_eq!(m.eval(x), 0.0);
            assert_eq!(m.derivative(x, 2), 0.0);
        }
    }

    #[test]
    fn antiderivative_endpoints() {
        let m = Mollifier::build(2, 1.0).unwrap();
        assert_eq!(m.antiderivative(-1.0), 0.0);
        assert_eq!(m.antiderivative(1.0), 1.0);
        assert!((m.antiderivative(0.0) - 0.5).abs() < 1e-13);
    }
}
