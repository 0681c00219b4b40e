//! Declarative scenario files.
//!
//! A scenario is a JSON document with four blocks: `problem` (dimensions and
//! field specifications), `regularization` (mollifiers and ε), `numerics`
//! (grid and iteration settings) and `experiment` (probes, radii, output).
//! Field specifications are either a builtin object tagged by `"builtin"`,
//! one expression string shared by all components (with `i` the 1-based
//! component), or one expression string per component.

use std::f64::consts::E;
use std::sync::Arc;

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::expr::{Env, Expr, Symbols};
use crate::gfunc::{geometric_grid, DiagnosticsConfig};
use crate::interp::InterpOrder;
use crate::mollifier::{Mollifier, SingularDatum};
use crate::solver::{PicardConfig, Quadrature, SolveConfig};
use crate::system::{FrozenSystem, GrowthTag, SystemMeta, SystemSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub regularization: RegularizationBlock,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    #[serde(default)]
    pub label: String,
    pub n: usize,
    pub k: usize,
    pub l: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub lambda: FieldSpec<LambdaBuiltin>,
    #[serde(rename = "F", default = "zero_source")]
    pub f: FieldSpec<SourceBuiltin>,
    #[serde(rename = "H", default = "zero_boundary")]
    pub h: FieldSpec<BoundaryBuiltin>,
    /// Initial data per component.
    #[serde(rename = "A")]
    pub a: Vec<DatumSpec>,
}

fn zero_source() -> FieldSpec<SourceBuiltin> {
    FieldSpec::Builtin(SourceBuiltin::Zero)
}

fn zero_boundary() -> FieldSpec<BoundaryBuiltin> {
    FieldSpec::Builtin(BoundaryBuiltin::Zero)
}

/// A builtin, one shared expression, or one expression per component.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FieldSpec<B> {
    Expr(String),
    Components(Vec<String>),
    Builtin(B),
}

impl<'de, B: DeserializeOwned> Deserialize<'de> for FieldSpec<B> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) => Ok(FieldSpec::Expr(s)),
            Value::Array(items) => items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s),
                    other => Err(D::Error::custom(format!(
                        "expected an expression string per component, got {other}"
                    ))),
                })
                .collect::<std::result::Result<_, _>>()
                .map(FieldSpec::Components),
            v @ Value::Object(_) => serde_json::from_value(v)
                .map(FieldSpec::Builtin)
                .map_err(D::Error::custom),
            other => Err(D::Error::custom(format!(
                "expected a builtin object, an expression string or a list of strings, got {other}"
            ))),
        }
    }
}

/// Builtin speed fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaBuiltin {
    /// `−1` for left-moving components, `+1` otherwise.
    Unit,
    Constant { speeds: Vec<f64> },
    /// `Λ_i = a_i + b_i x`.
    Affine { a: Vec<f64>, b: Vec<f64> },
}

/// Builtin source terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceBuiltin {
    Zero,
    /// `F_i = c U_i`.
    Linear { c: f64 },
    /// `F_i = c sin U_i`.
    Sine { c: f64 },
    /// `F_i = c U_i²`.
    Quadratic { c: f64 },
    /// `F_i = (G1² + G2² U_i²)^{1/2} log log (G3² + G4² U_i²)^{1/2}`; needs `|G3| > 1`.
    LoglogExample { g: [f64; 4] },
}

/// Builtin boundary operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryBuiltin {
    Zero,
    /// `H_i = gain · V_{n−1−i}`.
    CrossReflection { gain: f64 },
    /// `H_i = Σ_c M_ic V_c`.
    Linear { matrix: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// Initial datum of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    Zero,
    /// `amplitude · e · exp(−1/(1 − s²))` with `s = (x − center)/radius`.
    Bump {
        center: f64,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Expr { expr: String },
    Dirac {
        location: f64,
        #[serde(default = "one")]
        weight: f64,
    },
    DiracDerivative {
        location: f64,
        #[serde(default = "one")]
        weight: f64,
        #[serde(default = "one_usize")]
        order: usize,
    },
    Heaviside { location: f64, left: f64, right: f64 },
    Sum { terms: Vec<DatumSpec> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSpec {
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(rename = "R", default = "one")]
    pub radius: f64,
}

fn default_q() -> usize {
    2
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self { q: 2, radius: 1.0 }
    }
}

impl MollifierSpec {
    pub fn build(&self) -> Result<Mollifier> {
        Mollifier::build(self.q, self.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "yes")]
    pub geometric: bool,
}

fn yes() -> bool {
    true
}

impl GridSpec {
    /// Points from `start` to `stop` inclusive.
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.count < 2 {
            return Err(Error::Config(format!("grid count must be at least 2, got {}", self.count)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start == self.stop {
            return Err(Error::Config("grid start and stop must be finite and distinct".into()));
        }
        if self.geometric {
            if !(self.start > 0.0 && self.stop > 0.0) {
                return Err(Error::Config("geometric grid endpoints must be positive".into()));
            }
            Ok(geometric_grid(self.start, self.stop, self.count))
        } else {
            let h = (self.stop - self.start) / (self.count - 1) as f64;
            Ok((0..self.count).map(|k| self.start + h * k as f64).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationBlock {
    #[serde(default)]
    pub mollifier: MollifierSpec,
    /// ε of a single solve; singular data require it.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub eps_grid: Option<GridSpec>,
    /// The second kernel of the uniqueness experiment.
    #[serde(default)]
    pub second_mollifier: Option<MollifierSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardBlock {
    pub tol: f64,
    pub max_iter: usize,
    pub quadrature: Quadrature,
}

impl Default for PicardBlock {
    fn default() -> Self {
        let p = PicardConfig::default();
        Self {
            tol: p.tol,
            max_iter: p.max_iter,
            quadrature: p.quadrature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsBlock {
    /// Spatial intervals.
    #[serde(rename = "Nx")]
    pub nx: usize,
    /// Interpolation order, 1 or 3.
    pub interp: u32,
    pub picard: PicardBlock,
    pub theta: f64,
    pub dt: Option<f64>,
    pub trace_tol: f64,
    pub derivative: bool,
    pub require_compatible: bool,
    pub max_slab: Option<f64>,
    pub box_radius: Option<f64>,
    pub max_restarts: usize,
}

impl Default for NumericsBlock {
    fn default() -> Self {
        let s = SolveConfig::default();
        Self {
            nx: s.nx,
            interp: 3,
            picard: PicardBlock::default(),
            theta: s.theta,
            dt: s.dt,
            trace_tol: s.trace_tol,
            derivative: s.derivative,
            require_compatible: s.require_compatible,
            max_slab: s.max_slab,
            box_radius: s.box_radius,
            max_restarts: s.max_restarts,
        }
    }
}

/// Radii of the nonlinearity classifier: a list or a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiiSpec {
    List(Vec<f64>),
    Grid(GridSpec),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentBlock {
    /// Probe points `(x, t)`.
    pub probes: Vec<[f64; 2]>,
    pub radii: Option<RadiiSpec>,
    /// 1-based component the experiment focuses on; all when absent.
    pub component: Option<usize>,
    pub output_dir: Option<String>,
    pub diagnostics: Option<DiagnosticsConfig>,
    /// Relative residual below which a classifier model is accepted.
    pub classify_threshold: Option<f64>,
}

impl ScenarioConfig {
    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let p = &self.problem;
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return Err(Error::Config(format!("T must be positive, got {}", p.horizon)));
        }
        self.spec()?;
        if InterpOrder::from_order(self.numerics.interp).is_none() {
            return Err(Error::Config(format!(
                "interp must be 1 or 3, got {}",
                self.numerics.interp
            )));
        }
        self.solve_config().validate()?;
        if let Some(e) = self.regularization.epsilon {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Config(format!("epsilon must lie in (0, 1], got {e}")));
            }
        }
        if let Some(g) = &self.regularization.eps_grid {
            g.points()?;
        }
        if let Some(c) = self.experiment.component {
            if c < 1 || c > p.n {
                return Err(Error::Config(format!(
                    "experiment component {c} outside 1..={}",
                    p.n
                )));
            }
        }
        for pr in &self.experiment.probes {
            if !(pr[0] >= 0.0 && pr[0] <= p.l && pr[1] >= 0.0 && pr[1] <= p.horizon) {
                return Err(Error::Config(format!(
                    "probe ({}, {}) lies outside [0, {}] x [0, {}]",
                    pr[0], pr[1], p.l, p.horizon
                )));
            }
        }
        if let Some(r) = &self.experiment.radii {
            let radii = match r {
                RadiiSpec::List(v) => v.clone(),
                RadiiSpec::Grid(g) => g.points()?,
            };
            if radii.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Config("radii must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.problem.horizon
    }

    pub fn label(&self) -> &str {
        &self.problem.label
    }

    pub fn solve_config(&self) -> SolveConfig {
        let nm = &self.numerics;
        SolveConfig {
            picard: PicardConfig {
                tol: nm.picard.tol,
                max_iter: nm.picard.max_iter,
                quadrature: nm.picard.quadrature,
                interp: InterpOrder::from_order(nm.interp).unwrap_or(InterpOrder::Cubic),
            },
            nx: nm.nx,
            dt: nm.dt,
            theta: nm.theta,
            trace_tol: nm.trace_tol,
            derivative: nm.derivative,
            require_compatible: nm.require_compatible,
            box_radius: nm.box_radius,
            max_restarts: nm.max_restarts,
            max_slab: nm.max_slab,
        }
    }

    pub fn mollifier(&self) -> Result<Mollifier> {
        self.regularization.mollifier.build()
    }

    pub fn second_mollifier(&self) -> Result<Option<Mollifier>> {
        self.regularization.second_mollifier.map(|m| m.build()).transpose()
    }

    /// The ε grid, sorted decreasing.
    pub fn eps_grid(&self) -> Result<Option<Vec<f64>>> {
        let Some(g) = &self.regularization.eps_grid else {
            return Ok(None);
        };
        let mut pts = g.points()?;
        pts.sort_by(|a, b| b.total_cmp(a));
        Ok(Some(pts))
    }

    pub fn probes(&self) -> Vec<(f64, f64)> {
        self.experiment.probes.iter().map(|p| (p[0], p[1])).collect()
    }

    pub fn radii(&self) -> Result<Option<Vec<f64>>> {
        match &self.experiment.radii {
            None => Ok(None),
            Some(RadiiSpec::List(v)) => Ok(Some(v.clone())),
            Some(RadiiSpec::Grid(g)) => g.points().map(Some),
        }
    }

    /// 0-based experiment component.
    pub fn component(&self) -> Option<usize> {
        self.experiment.component.map(|c| c - 1)
    }

    pub fn diagnostics(&self) -> DiagnosticsConfig {
        self.experiment.diagnostics.clone().unwrap_or_default()
    }

    /// The ε-parameterized system.
    pub fn spec(&self) -> Result<SystemSpec> {
        let p = &self.problem;
        let (n, k) = (p.n, p.k);
        FrozenSystem::builder(n, k, p.l)?;
        if p.a.len() != n {
            return Err(Error::Config(format!(
                "A lists {} data, expected n = {n}",
                p.a.len()
            )));
        }
        let data = p
            .a
            .iter()
            .map(|d| datum(d))
            .collect::<Result<Vec<_>>>()?;
        let lambda = lambda_field(&p.lambda, n, k)?;
        let (f, f_zero, f_class) = source_field(&p.f, n)?;
        let (h, h_zero, h_class) = boundary_field(&p.h, n)?;
        Ok(SystemSpec {
            n,
            k,
            l: p.l,
            lambda,
            f,
            h,
            data,
            meta: SystemMeta {
                label: p.label.clone(),
                f_class,
                h_class,
                epsilon: None,
                f_zero,
                h_zero,
            },
        })
    }

    /// The system at the configured ε.
    ///
    /// Data are regularized when ε is given; otherwise they must be smooth.
    pub fn freeze(&self) -> Result<FrozenSystem> {
        let spec = self.spec()?;
        match self.regularization.epsilon {
            Some(e) => spec.freeze(Some(e), Some(&self.mollifier()?)),
            None => {
                if spec.data.iter().any(|d| d.is_singular()) {
                    return Err(Error::Config(
                        "singular initial data need regularization.epsilon".into(),
                    ));
                }
                spec.freeze(None, None)
            }
        }
    }
}

/// The standard bump `e · exp(−1/(1 − s²))`, peak 1 at `s = 0`.
pub fn bump(x: f64, center: f64, radius: f64) -> f64 {
    let s = (x - center) / radius;
    if s.abs() >= 1.0 {
        0.0
    } else {
        E * (-1.0 / (1.0 - s * s)).exp()
    }
}

fn datum(d: &DatumSpec) -> Result<SingularDatum> {
    Ok(match d {
        DatumSpec::Zero => SingularDatum::smooth(|_| 0.0),
        &DatumSpec::Bump {
            center,
            radius,
            amplitude,
        } => {
            if !(radius > 0.0) {
                return Err(Error::Config(format!("bump radius must be positive, got {radius}")));
            }
            SingularDatum::smooth(move |x| amplitude * bump(x, center, radius))
        }
        DatumSpec::Expr { expr } => {
            let e = Expr::parse(
                expr,
                &Symbols {
                    x: true,
                    ..Default::default()
                },
            )?;
            SingularDatum::smooth(move |x| {
                e.eval(&Env {
                    x,
                    t: 0.0,
                    eps: f64::NAN,
                    component: 0,
                    u: &[],
                    v: &[],
                })
            })
        }
        &DatumSpec::Dirac { location, weight } => SingularDatum::Dirac { location, weight },
        &DatumSpec::DiracDerivative {
            location,
            weight,
            order,
        } => SingularDatum::DiracDerivative {
            location,
            weight,
            order,
        },
        &DatumSpec::Heaviside {
            location,
            left,
            right,
        } => SingularDatum::Heaviside {
            location,
            left,
            right,
        },
        DatumSpec::Sum { terms } => {
            SingularDatum::Sum(terms.iter().map(datum).collect::<Result<_>>()?)
        }
    })
}

/// One parsed expression per component.
fn expressions<B>(spec: &FieldSpec<B>, n: usize, symbols: Symbols, what: &str) -> Result<Vec<Expr>> {
    match spec {
        FieldSpec::Expr(s) => {
            let e = Expr::parse(s, &Symbols {
                component: true,
                ..symbols
            })?;
            Ok(vec![e; n])
        }
        FieldSpec::Components(v) => {
            if v.len() != n {
                return Err(Error::Config(format!(
                    "{what} lists {} expressions, expected n = {n}",
                    v.len()
                )));
            }
            v.iter().map(|s| Expr::parse(s, &symbols)).collect()
        }
        FieldSpec::Builtin(_) => unreachable!("builtins are handled by the caller"),
    }
}

fn check_len(what: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::Config(format!("{what} has {got} entries, expected n = {n}")));
    }
    Ok(())
}

type Lambda = crate::system::EpsLambdaFn;
type Source = crate::system::EpsSourceFn;
type Boundary = crate::system::EpsBoundaryFn;

fn lambda_field(spec: &FieldSpec<LambdaBuiltin>, n: usize, k: usize) -> Result<Lambda> {
    let f: Lambda = match spec {
        FieldSpec::Builtin(LambdaBuiltin::Unit) => {
            Arc::new(move |_, i, _, _| if i < k { -1.0 } else { 1.0 })
        }
        FieldSpec::Builtin(LambdaBuiltin::Constant { speeds }) => {
            check_len("lambda speeds", speeds.len(), n)?;
            let s = speeds.clone();
            Arc::new(move |_, i, _, _| s[i])
        }
        FieldSpec::Builtin(LambdaBuiltin::Affine { a, b }) => {
            check_len("lambda a", a.len(), n)?;
            check_len("lambda b", b.len(), n)?;
            let (a, b) = (a.clone(), b.clone());
            Arc::new(move |_, i, x, _| a[i] + b[i] * x)
        }
        _ => {
            let ex = expressions(
                spec,
                n,
                Symbols {
                    x: true,
                    t: true,
                    eps: true,
                    ..Default::default()
                },
                "lambda",
            )?;
            Arc::new(move |eps, i, x, t| {
                ex[i].eval(&Env {
                    x,
                    t,
                    eps,
                    component: i,
                    u: &[],
                    v: &[],
                })
            })
        }
    };
    Ok(f)
}

/// `sqrt(G1² + G2² y²) · log log sqrt(G3² + G4² y²)`.
pub fn loglog_example(g: &[f64; 4], y: f64) -> f64 {
    let a = (g[0] * g[0] + g[1] * g[1] * y * y).sqrt();
    let b = (g[2] * g[2] + g[3] * g[3] * y * y).sqrt();
    a * b.ln().ln()
}

/// `d/dy` of [`loglog_example`].
pub fn loglog_example_dy(g: &[f64; 4], y: f64) -> f64 {
    let s1 = g[0] * g[0] + g[1] * g[1] * y * y;
    let s2 = g[2] * g[2] + g[3] * g[3] * y * y;
    let a = s1.sqrt();
    let lb = 0.5 * s2.ln();
    g[1] * g[1] * y / a * lb.ln() + a * g[3] * g[3] * y / (s2 * lb)
}

fn source_field(spec: &FieldSpec<SourceBuiltin>, n: usize) -> Result<(Source, bool, GrowthTag)> {
    Ok(match spec {
        FieldSpec::Builtin(b) => match *b {
            SourceBuiltin::Zero => (Arc::new(|_, _, _, _, _| 0.0), true, GrowthTag::Lipschitz),
            SourceBuiltin::Linear { c } => {
                (Arc::new(move |_, i, _, _, y: &[f64]| c * y[i]), c == 0.0, GrowthTag::Lipschitz)
            }
            SourceBuiltin::Sine { c } => (
                Arc::new(move |_, i, _, _, y: &[f64]| c * y[i].sin()),
                c == 0.0,
                GrowthTag::Lipschitz,
            ),
            SourceBuiltin::Quadratic { c } => (
                Arc::new(move |_, i, _, _, y: &[f64]| c * y[i] * y[i]),
                c == 0.0,
                GrowthTag::Unclassified,
            ),
            SourceBuiltin::LoglogExample { g } => {
                if !(g[2].abs() > 1.0) || g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config(format!(
                        "loglog_example needs finite g with |G3| > 1, got {g:?}"
                    )));
                }
                (
                    Arc::new(move |_, i, _, _, y: &[f64]| loglog_example(&g, y[i])),
                    false,
                    GrowthTag::Loglog,
                )
            }
        },
        _ => {
            let ex = expressions(
                spec,
                n,
                Symbols {
                    x: true,
                    t: true,
                    eps: true,
                    u: n,
                    ..Default::default()
                },
                "F",
            )?;
            let zero = ex.iter().all(|e| e.is_zero());
            (
                Arc::new(move |eps, i, x, t, y: &[f64]| {
                    ex[i].eval(&Env {
                        x,
                        t,
                        eps,
                        component: i,
                        u: y,
                        v: &[],
                    })
                }),
                zero,
                GrowthTag::Unclassified,
            )
        }
    })
}

fn boundary_field(spec: &FieldSpec<BoundaryBuiltin>, n: usize) -> Result<(Boundary, bool, GrowthTag)> {
    Ok(match spec {
        FieldSpec::Builtin(BoundaryBuiltin::Zero) => {
            (Arc::new(|_, _, _, _| 0.0), true, GrowthTag::Lipschitz)
        }
        &FieldSpec::Builtin(BoundaryBuiltin::CrossReflection { gain }) => (
            Arc::new(move |_, i, _, z: &[f64]| gain * z[z.len() - 1 - i]),
            gain == 0.0,
            GrowthTag::Lipschitz,
        ),
        FieldSpec::Builtin(BoundaryBuiltin::Linear { matrix }) => {
            check_len("H matrix", matrix.len(), n)?;
            for row in matrix {
                check_len("H matrix row", row.len(), n)?;
            }
            let m = matrix.clone();
            let zero = m.iter().flatten().all(|&v| v == 0.0);
            (
                Arc::new(move |_, i, _, z: &[f64]| m[i].iter().zip(z).map(|(a, b)| a * b).sum()),
                zero,
                GrowthTag::Lipschitz,
            )
        }
        _ => {
            let ex = expressions(
                spec,
                n,
                Symbols {
                    t: true,
                    eps: true,
                    v: n,
                    ..Default::default()
                },
                "H",
            )?;
            let zero = ex.iter().all(|e| e.is_zero());
            (
                Arc::new(move |eps, i, t, z: &[f64]| {
                    ex[i].eval(&Env {
                        x: f64::NAN,
                        t,
                        eps,
                        component: i,
                        u: &[],
                        v: z,
                    })
                }),
                zero,
                GrowthTag::Unclassified,
            )
        }
    })
}
