//! Slab plans, contraction constants and the iterated a priori bound.

use serde::{Deserialize, Serialize};

use crate::characteristics::slab_bound_geometric;
use crate::error::{Error, Result};
use crate::numfmt::nonfinite;
use crate::solver::driver::DataMaxima;
use crate::solver::LipschitzEstimate;
use crate::system::FrozenSystem;

/// Geometric bounds below this signal near-tangent characteristics.
const COLLAPSE: f64 = 1e-12;
/// Slab start times sampled when minimizing the geometric bound.
const GEOMETRIC_SAMPLES: usize = 8;

/// Partition of `[0, T]` into equal slabs on which the integral operator contracts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabPlan {
    pub horizon: f64,
    /// `n L_F (1 + n L_H)`.
    pub q0: f64,
    /// Constant the slab length honors: `q0`, or `q1` when the derivative is solved.
    pub q: f64,
    /// Derivative order `m` of the honored constant `q_m`.
    pub m: u32,
    pub t_slab: f64,
    pub slab_count: usize,
    #[serde(with = "nonfinite")]
    pub geometric_bound: f64,
    pub theta: f64,
}

impl SlabPlan {
    /// `q t_slab`, the planned contraction factor per slab.
    pub fn contraction(&self) -> f64 {
        self.q * self.t_slab
    }

    pub fn q0_t(&self) -> f64 {
        self.q0 * self.t_slab
    }
}

/// `(n L_F + m E_Λ(1,0)) (1 + n L_H)`.
pub fn q_m(n: usize, l_f: f64, l_h: f64, e_lambda_10: f64, m: u32) -> f64 {
    let n = n as f64;
    (n * l_f + m as f64 * e_lambda_10) * (1.0 + n * l_h)
}

/// Smallest geometric slab bound over sampled start times in `[0, horizon)`.
pub fn geometric_bound(sys: &FrozenSystem, horizon: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for s in 0..GEOMETRIC_SAMPLES {
        let tau0 = horizon * s as f64 / GEOMETRIC_SAMPLES as f64;
        best = best.min(slab_bound_geometric(sys, tau0, horizon)?.bound);
    }
    Ok(best)
}

/// Plan from explicit constants.
///
/// The admissible length is `min(geometric_bound, theta / q_m)`; the horizon
/// is then split into `⌈T / t_max⌉` equal slabs.
pub fn plan_from_constants(
    horizon: f64,
    n: usize,
    l_f: f64,
    l_h: f64,
    e_lambda_10: f64,
    m: u32,
    geometric_bound: f64,
    theta: f64,
) -> Result<SlabPlan> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1), got {theta}")));
    }
    if !(geometric_bound > COLLAPSE) {
        return Err(Error::SlabCollapse(geometric_bound));
    }
    let q0 = q_m(n, l_f, l_h, e_lambda_10, 0);
    let q = q_m(n, l_f, l_h, e_lambda_10, m);
    let t_max = if q > 0.0 {
        geometric_bound.min(theta / q)
    } else {
        geometric_bound
    };
    let t_max = t_max.min(horizon);
    let ratio = horizon / t_max;
    let mut slab_count = ratio.ceil().max(1.0) as usize;
    // Guard against ratios a rounding error above an integer.
    if slab_count > 1 && (ratio - (slab_count - 1) as f64) < 1e-12 * ratio {
        slab_count -= 1;
    }
    let t_slab = horizon / slab_count as f64;
    Ok(SlabPlan {
        horizon,
        q0,
        q,
        m,
        t_slab,
        slab_count,
        geometric_bound,
        theta,
    })
}

/// Plans slabs for `sys` over `[0, horizon]` from a Lipschitz estimate.
///
/// With `derivative` the slab honors `q1` so the derivative system contracts too.
pub fn plan_slabs(
    sys: &FrozenSystem,
    horizon: f64,
    lip: &LipschitzEstimate,
    theta: f64,
    derivative: bool,
) -> Result<SlabPlan> {
    let gb = geometric_bound(sys, horizon)?;
    plan_from_constants(
        horizon,
        sys.n,
        lip.l_f,
        lip.l_h,
        lip.e_lambda_10,
        u32::from(derivative),
        gb,
        theta,
    )
}

/// Iterates `B_j = [(B_{j−1} + T maxF0)(1 + n L_H) + maxH0] / (1 − q0 t_slab)`
/// from `B_0 = maxA` over every slab of the plan.
pub fn compute_apriori_bound(data: &DataMaxima, n: usize, l_h: f64, plan: &SlabPlan) -> Result<f64> {
    let qt = plan.q0 * plan.t_slab;
    if qt >= 1.0 {
        return Err(Error::PlanViolation(qt));
    }
    let gain = 1.0 + n as f64 * l_h;
    let mut b = data.max_a;
    for _ in 0..plan.slab_count {
        b = ((b + plan.horizon * data.max_f0) * gain + data.max_h0) / (1.0 - qt);
    }
    Ok(b)
}
