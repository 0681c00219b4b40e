//! Slab-decomposed Picard iteration of the integral form, the first-derivative
//! system, and the bookkeeping around it: Lipschitz estimates, slab plans,
//! a priori bounds and compatibility checks.

mod compat;
mod derivative;
mod driver;
mod engine;
mod field;
mod lipschitz;
mod paths;
mod plan;
mod slab;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::InterpOrder;
use crate::numfmt::{nonfinite, nonfinite_vec};

pub use compat::{check_compatibility, CompatReport, ComponentCompat};
pub use derivative::solve_derivative_slab;
pub use driver::{data_maxima, solve, DataMaxima};
pub use field::{SlabField, SlabGeometry};
pub use lipschitz::{estimate_lipschitz, LipschitzEstimate};
pub use paths::{FloorData, Quadrature};
pub use plan::{compute_apriori_bound, geometric_bound, plan_from_constants, plan_slabs, q_m, SlabPlan};
pub use slab::{picard_solve_slab, SlabSolution};

/// Stopping rule and discretization choices of one Picard solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardConfig {
    /// Sup-norm difference of successive iterates at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    pub quadrature: Quadrature,
    /// Interpolation order for off-grid values along characteristics.
    pub interp: InterpOrder,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 60,
            quadrature: Quadrature::Trapezoid,
            interp: InterpOrder::Cubic,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("picard tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("picard max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything [`solve`] needs besides the system and the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub picard: PicardConfig,
    /// Number of spatial intervals; the grid has `nx + 1` nodes.
    pub nx: usize,
    /// Target time step; defaults to `l / (nx max|Λ|)`.
    pub dt: Option<f64>,
    /// Contraction margin: slabs satisfy `q t_slab ≤ theta`.
    pub theta: f64,
    /// Tolerance of the characteristic integrator.
    pub trace_tol: f64,
    /// Also solve the first-derivative system.
    pub derivative: bool,
    /// Refuse data that violate the compatibility conditions.
    pub require_compatible: bool,
    /// Initial radius of the Lipschitz box; defaults from the data maxima.
    pub box_radius: Option<f64>,
    /// Box doublings allowed before giving up.
    pub max_restarts: usize,
    /// Upper limit on the slab length on top of the planned one.
    pub max_slab: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            picard: PicardConfig::default(),
            nx: 400,
            dt: None,
            theta: 0.5,
            trace_tol: 1e-10,
            derivative: false,
            require_compatible: true,
            box_radius: None,
            max_restarts: 8,
            max_slab: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        self.picard.validate()?;
        if self.nx < 4 {
            return Err(Error::Config(format!("nx must be at least 4, got {}", self.nx)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.trace_tol > 0.0) {
            return Err(Error::Config("trace_tol must be positive".into()));
        }
        if let Some(s) = self.max_slab {
            if !(s > 0.0) {
                return Err(Error::Config(format!("max_slab must be positive, got {s}")));
            }
        }
        if let Some(r) = self.box_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("box_radius must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// Iteration history of one slab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabReport {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub levels: usize,
    pub iterations: usize,
    pub final_diff: f64,
    /// Sup-norm differences of successive iterates.
    pub diffs: Vec<f64>,
    /// Ratios of successive differences above rounding noise.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Planned contraction constant times slab length.
    #[serde(with = "nonfinite")]
    pub q_t: f64,
}

/// One entry of the table of `max |∂_x^a ∂_t^b U|` over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupEntry {
    pub dx_order: u32,
    pub dt_order: u32,
    pub value: f64,
}

/// Node values of `U` over the whole horizon.
///
/// The time grid is uniform across slabs, so global level `g` of slab `s` is
/// `s · levels_per_slab + m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionGrid {
    pub n: usize,
    pub x_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub levels_per_slab: usize,
    /// `values[(g n + i)(nx + 1) + j]`.
    pub values: Vec<f64>,
    /// `V` at every level, `[g n + i]`.
    pub boundary_record: Vec<f64>,
    pub interp: InterpOrder,
    pub sup_table: Vec<SupEntry>,
    /// `∂_x U` in the layout of `values`, when requested.
    pub derivative: Option<Vec<f64>>,
}

impl SolutionGrid {
    pub fn nx(&self) -> usize {
        self.x_nodes.len() - 1
    }

    pub fn levels(&self) -> usize {
        self.t_nodes.len()
    }

    #[inline]
    pub fn idx(&self, g: usize, i: usize, j: usize) -> usize {
        (g * self.n + i) * self.x_nodes.len() + j
    }

    #[inline]
    pub fn get(&self, g: usize, i: usize, j: usize) -> f64 {
        self.values[self.idx(g, i, j)]
    }

    pub fn derivative_at(&self, g: usize, i: usize, j: usize) -> Option<f64> {
        self.derivative.as_ref().map(|d| d[self.idx(g, i, j)])
    }

    /// `V(t_g)`.
    pub fn boundary_at(&self, g: usize) -> &[f64] {
        &self.boundary_record[g * self.n..(g + 1) * self.n]
    }

    /// `U_i(x, t)` by separable interpolation.
    pub fn eval(&self, i: usize, x: f64, t: f64) -> f64 {
        let xa = crate::interp::UniformAxis::new(self.x_nodes[0], *self.x_nodes.last().unwrap(), self.x_nodes.len());
        let ta = crate::interp::UniformAxis::new(self.t_nodes[0], *self.t_nodes.last().unwrap(), self.t_nodes.len());
        let sx = xa.stencil(x, self.interp);
        let st = ta.stencil(t, self.interp);
        let w = self.x_nodes.len();
        let mut acc = 0.0;
        for a in 0..st.width {
            let s = self.idx(st.start + a, i, 0);
            acc += st.weights[a] * sx.apply(&self.values[s..s + w]);
        }
        acc
    }

    /// Largest `|U|` over all nodes, `E_U(0, 0; T)`.
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn sup_entry(&self, dx_order: u32, dt_order: u32) -> Option<f64> {
        self.sup_table
            .iter()
            .find(|e| e.dx_order == dx_order && e.dt_order == dt_order)
            .map(|e| e.value)
    }
}

/// Everything measured during a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub horizon: f64,
    pub plan: SlabPlan,
    pub lipschitz: LipschitzEstimate,
    pub data: DataMaxima,
    pub compatibility: CompatReport,
    /// Sampled `min |Λ_i|`.
    pub lambda_floor: f64,
    pub slabs: Vec<SlabReport>,
    pub derivative_slabs: Vec<SlabReport>,
    pub iterations: Vec<usize>,
    #[serde(with = "nonfinite_vec")]
    pub contraction_ratios: Vec<f64>,
    #[serde(with = "nonfinite")]
    pub apriori_bound: f64,
    pub sup_achieved: f64,
    pub bound_satisfied: bool,
    /// Lipschitz box doublings before the final solve.
    pub restarts: usize,
}
