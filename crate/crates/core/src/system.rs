//! Problem instances: the ε-parameterized [`SystemSpec`] and the
//! [`FrozenSystem`] obtained by fixing ε and regularizing the data.
//!
//! Components are indexed from 0. Components `0..k` travel left (`Λ_i < 0`),
//! the rest travel right. The boundary record is
//! `V(t) = (U_0(0,t), …, U_{k−1}(0,t), U_k(l,t), …, U_{n−1}(l,t))`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mollifier::{Mollifier, Regularized, SingularDatum};

pub type LambdaFn = Arc<dyn Fn(usize, f64, f64) -> f64 + Send + Sync>;
pub type SourceFn = Arc<dyn Fn(usize, f64, f64, &[f64]) -> f64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(usize, f64, &[f64]) -> f64 + Send + Sync>;
pub type DataFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Growth class declared for a nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthTag {
    Lipschitz,
    Loglog,
    LoglogQuarter,
    #[default]
    Unclassified,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SystemMeta {
    pub label: String,
    pub f_class: GrowthTag,
    pub h_class: GrowthTag,
    pub epsilon: Option<f64>,
    /// `F ≡ 0`; lets the solver skip quadrature along traces.
    pub f_zero: bool,
    /// `H ≡ 0`.
    pub h_zero: bool,
}

/// Relative step for finite-difference fallbacks.
const FD_STEP: f64 = 1e-6;
const LAMBDA_FLOOR_MIN: f64 = 1e-8;
const PROBE_POINTS: usize = 33;

/// The fields of the system at a fixed ε.
#[derive(Clone)]
pub struct FrozenSystem {
    pub n: usize,
    pub k: usize,
    pub l: f64,
    lambda: LambdaFn,
    f: SourceFn,
    h: BoundaryFn,
    a: DataFn,
    a_prime: Option<DataFn>,
    lambda_x: Option<LambdaFn>,
    f_x: Option<SourceFn>,
    h_t: Option<BoundaryFn>,
    pub meta: SystemMeta,
}

impl fmt::Debug for FrozenSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrozenSystem")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("l", &self.l)
            .field("meta", &self.meta)
            .finish()
    }
}

/// Builder for [`FrozenSystem`]; unset fields default to zero.
pub struct FrozenBuilder {
    sys: FrozenSystem,
}

impl FrozenBuilder {
    pub fn lambda(mut self, f: impl Fn(usize, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sys.lambda = Arc::new(f);
        self
    }

    pub fn source(mut self, f: impl Fn(usize, f64, f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.sys.f = Arc::new(f);
        self.sys.meta.f_zero = false;
        self
    }

    pub fn boundary(mut self, f: impl Fn(usize, f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.sys.h = Arc::new(f);
        self.sys.meta.h_zero = false;
        self
    }

    pub fn data(mut self, f: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sys.a = Arc::new(f);
        self.sys.a_prime = None;
        self
    }

    pub fn data_derivative(mut self, f: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sys.a_prime = Some(Arc::new(f));
        self
    }

    pub fn lambda_x(mut self, f: impl Fn(usize, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.sys.lambda_x = Some(Arc::new(f));
        self
    }

    pub fn source_x(mut self, f: impl Fn(usize, f64, f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.sys.f_x = Some(Arc::new(f));
        self
    }

    pub fn boundary_t(mut self, f: impl Fn(usize, f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.sys.h_t = Some(Arc::new(f));
        self
    }

    pub fn lambda_arc(mut self, f: LambdaFn) -> Self {
        self.sys.lambda = f;
        self
    }

    pub fn source_arc(mut self, f: SourceFn, zero: bool) -> Self {
        self.sys.f = f;
        self.sys.meta.f_zero = zero;
        self
    }

    pub fn boundary_arc(mut self, f: BoundaryFn, zero: bool) -> Self {
        self.sys.h = f;
        self.sys.meta.h_zero = zero;
        self
    }

    pub fn data_arc(mut self, a: DataFn, a_prime: Option<DataFn>) -> Self {
        self.sys.a = a;
        self.sys.a_prime = a_prime;
        self
    }

    pub fn meta(mut self, meta: SystemMeta) -> Self {
        let (fz, hz) = (self.sys.meta.f_zero, self.sys.meta.h_zero);
        self.sys.meta = SystemMeta {
            f_zero: fz,
            h_zero: hz,
            ..meta
        };
        self
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.sys.meta.label = label.into();
        self
    }

    pub fn build(self) -> Result<FrozenSystem> {
        Ok(self.sys)
    }
}

impl FrozenSystem {
    /// Starts a builder after checking `1 ≤ k ≤ n` and `l > 0`.
    pub fn builder(n: usize, k: usize, l: f64) -> Result<FrozenBuilder> {
        check_dims(n, k, l)?;
        Ok(FrozenBuilder {
            sys: FrozenSystem {
                n,
                k,
                l,
                lambda: Arc::new(move |i, _, _| if i < k { -1.0 } else { 1.0 }),
                f: Arc::new(|_, _, _, _| 0.0),
                h: Arc::new(|_, _, _| 0.0),
                a: Arc::new(|_, _| 0.0),
                a_prime: None,
                lambda_x: None,
                f_x: None,
                h_t: None,
                meta: SystemMeta {
                    f_zero: true,
                    h_zero: true,
                    ..Default::default()
                },
            },
        })
    }

    /// Whether component `i` travels left.
    #[inline]
    pub fn is_left(&self, i: usize) -> bool {
        i < self.k
    }

    /// Boundary where component `i` leaves the strip and enters `V`.
    #[inline]
    pub fn outgoing_x(&self, i: usize) -> f64 {
        if self.is_left(i) {
            0.0
        } else {
            self.l
        }
    }

    /// Boundary where component `i` is prescribed by `H_i`.
    #[inline]
    pub fn incoming_x(&self, i: usize) -> f64 {
        if self.is_left(i) {
            self.l
        } else {
            0.0
        }
    }

    #[inline]
    pub fn lambda(&self, i: usize, x: f64, t: f64) -> f64 {
        (self.lambda)(i, x, t)
    }

    #[inline]
    pub fn f(&self, i: usize, x: f64, t: f64, y: &[f64]) -> f64 {
        (self.f)(i, x, t, y)
    }

    #[inline]
    pub fn h(&self, i: usize, t: f64, z: &[f64]) -> f64 {
        (self.h)(i, t, z)
    }

    #[inline]
    pub fn a(&self, i: usize, x: f64) -> f64 {
        (self.a)(i, x)
    }

    pub fn a_prime(&self, i: usize, x: f64) -> f64 {
        match &self.a_prime {
            Some(d) => d(i, x),
            None => {
                let h = FD_STEP * x.abs().max(1.0);
                (self.a(i, x + h) - self.a(i, x - h)) / (2.0 * h)
            }
        }
    }

    pub fn lambda_x(&self, i: usize, x: f64, t: f64) -> f64 {
        match &self.lambda_x {
            Some(d) => d(i, x, t),
            None => {
                let h = FD_STEP * x.abs().max(1.0);
                (self.lambda(i, x + h, t) - self.lambda(i, x - h, t)) / (2.0 * h)
            }
        }
    }

    /// `∂_x F_i` at fixed `U`.
    pub fn f_x(&self, i: usize, x: f64, t: f64, y: &[f64]) -> f64 {
        if self.meta.f_zero {
            return 0.0;
        }
        match &self.f_x {
            Some(d) => d(i, x, t, y),
            None => {
                let h = FD_STEP * x.abs().max(1.0);
                (self.f(i, x + h, t, y) - self.f(i, x - h, t, y)) / (2.0 * h)
            }
        }
    }

    /// `∂_t H_i` at fixed `V`.
    pub fn h_t(&self, i: usize, t: f64, z: &[f64]) -> f64 {
        if self.meta.h_zero {
            return 0.0;
        }
        match &self.h_t {
            Some(d) => d(i, t, z),
            None => {
                let h = FD_STEP * t.abs().max(1.0);
                (self.h(i, t + h, z) - self.h(i, t - h, z)) / (2.0 * h)
            }
        }
    }

    /// `∇_U F_i` by centered differences into `out`.
    pub fn grad_f(&self, i: usize, x: f64, t: f64, y: &[f64], out: &mut [f64]) {
        if self.meta.f_zero {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let mut p = y.to_vec();
        for j in 0..self.n {
            let h = FD_STEP * y[j].abs().max(1.0);
            p[j] = y[j] + h;
            let up = self.f(i, x, t, &p);
            p[j] = y[j] - h;
            let dn = self.f(i, x, t, &p);
            p[j] = y[j];
            out[j] = (up - dn) / (2.0 * h);
        }
    }

    /// `∇_V H_i` by centered differences into `out`.
    pub fn grad_h(&self, i: usize, t: f64, z: &[f64], out: &mut [f64]) {
        if self.meta.h_zero {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let mut p = z.to_vec();
        for j in 0..self.n {
            let h = FD_STEP * z[j].abs().max(1.0);
            p[j] = z[j] + h;
            let up = self.h(i, t, &p);
            p[j] = z[j] - h;
            let dn = self.h(i, t, &p);
            p[j] = z[j];
            out[j] = (up - dn) / (2.0 * h);
        }
    }

    /// Checks the sign pattern of `Λ` on a lattice over `[0, l] × [0, horizon]`
    /// and returns the sampled floor `min |Λ_i|`.
    pub fn check_speeds(&self, horizon: f64) -> Result<f64> {
        let mut floor = f64::INFINITY;
        for i in 0..self.n {
            for a in 0..PROBE_POINTS {
                let x = self.l * a as f64 / (PROBE_POINTS - 1) as f64;
                for b in 0..PROBE_POINTS {
                    let t = horizon * b as f64 / (PROBE_POINTS - 1) as f64;
                    let v = self.lambda(i, x, t);
                    let ok = if self.is_left(i) { v < 0.0 } else { v > 0.0 };
                    if !ok || !v.is_finite() || v.abs() < LAMBDA_FLOOR_MIN {
                        return Err(Error::SignPattern {
                            component: i,
                            x,
                            t,
                            value: v,
                        });
                    }
                    floor = floor.min(v.abs());
                }
            }
        }
        Ok(floor)
    }

    /// Largest sampled `|Λ_i|`.
    pub fn max_speed(&self, horizon: f64) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for a in 0..PROBE_POINTS {
                let x = self.l * a as f64 / (PROBE_POINTS - 1) as f64;
                for b in 0..PROBE_POINTS {
                    let t = horizon * b as f64 / (PROBE_POINTS - 1) as f64;
                    m = m.max(self.lambda(i, x, t).abs());
                }
            }
        }
        m
    }

    /// Boundary record `V` from the boundary values of each component.
    pub fn boundary_record(&self, left: &[f64], right: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = if self.is_left(i) { left[i] } else { right[i] };
        }
    }
}

fn check_dims(n: usize, k: usize, l: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    if k < 1 || k > n {
        return Err(Error::Config(format!(
            "k = {k} violates the constraint 1 <= k <= n (n = {n})"
        )));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Config(format!("strip length l must be positive, got {l}")));
    }
    Ok(())
}

pub type EpsLambdaFn = Arc<dyn Fn(f64, usize, f64, f64) -> f64 + Send + Sync>;
pub type EpsSourceFn = Arc<dyn Fn(f64, usize, f64, f64, &[f64]) -> f64 + Send + Sync>;
pub type EpsBoundaryFn = Arc<dyn Fn(f64, usize, f64, &[f64]) -> f64 + Send + Sync>;

/// A problem instance whose fields depend on ε, with data from the singular catalog.
#[derive(Clone)]
pub struct SystemSpec {
    pub n: usize,
    pub k: usize,
    pub l: f64,
    pub lambda: EpsLambdaFn,
    pub f: EpsSourceFn,
    pub h: EpsBoundaryFn,
    pub data: Vec<SingularDatum>,
    pub meta: SystemMeta,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("l", &self.l)
            .field("data", &self.data)
            .field("meta", &self.meta)
            .finish()
    }
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        check_dims(self.n, self.k, self.l)?;
        if self.data.len() != self.n {
            return Err(Error::Config(format!(
                "expected {} initial data entries, got {}",
                self.n,
                self.data.len()
            )));
        }
        Ok(())
    }

    /// Fixes ε and regularizes the data with `mollifier` (when given).
    ///
    /// Without a mollifier the data must be smooth and ε only feeds the fields.
    pub fn freeze(&self, eps: Option<f64>, mollifier: Option<&Mollifier>) -> Result<FrozenSystem> {
        self.validate()?;
        let regs: Vec<Regularized> = match (mollifier, eps) {
            (Some(m), Some(e)) => self
                .data
                .iter()
                .map(|d| m.regularize(d, e, (0.0, self.l)))
                .collect::<Result<_>>()?,
            _ => self
                .data
                .iter()
                .map(|d| Regularized::unregularized(d.clone()))
                .collect::<Result<_>>()?,
        };
        let regs = Arc::new(regs);
        let r2 = regs.clone();
        let e = eps.unwrap_or(f64::NAN);
        let (lam, f, h) = (self.lambda.clone(), self.f.clone(), self.h.clone());
        let mut meta = self.meta.clone();
        meta.epsilon = eps;
        FrozenSystem::builder(self.n, self.k, self.l)?
            .lambda_arc(Arc::new(move |i, x, t| lam(e, i, x, t)))
            .source_arc(Arc::new(move |i, x, t, y| f(e, i, x, t, y)), self.meta.f_zero)
            .boundary_arc(Arc::new(move |i, t, z| h(e, i, t, z)), self.meta.h_zero)
            .data_arc(
                Arc::new(move |i, x| regs[i].eval(x)),
                Some(Arc::new(move |i, x| r2[i].derivative(x))),
            )
            .meta(meta)
            .build()
    }
}
