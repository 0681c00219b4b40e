//! Sampled Lipschitz constants of `F` and `H` on a state box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::FrozenSystem;

/// Lattice points per axis in `x` and `t`.
const SPACE_TIME_POINTS: usize = 9;
/// Lattice points per axis for `∂_x Λ`.
const LAMBDA_POINTS: usize = 33;
/// Budget of state lattice points per `(x, t)` sample.
const STATE_BUDGET: f64 = 4096.0;
const MAX_STATE_POINTS: usize = 65;
/// Safety factor on the lattice maxima.
pub const INFLATION: f64 = 1.1;

/// Lipschitz constants of the fields over `Π^T` and the box `|y| ≤ box_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// Inflated `max |∂F_i / ∂y_c|`.
    pub l_f: f64,
    /// Inflated `max |∂H_i / ∂z_c|`.
    pub l_h: f64,
    /// `max |∂_x Λ_i|`, the constant `E_Λ(1, 0; T)`.
    pub e_lambda_10: f64,
    pub raw_l_f: f64,
    pub raw_l_h: f64,
    pub box_radius: f64,
    pub state_points: usize,
}

/// Odd number of state lattice points per axis for `n` components.
fn state_points(n: usize) -> usize {
    let p = STATE_BUDGET.powf(1.0 / n as f64).floor() as usize;
    let p = p.clamp(3, MAX_STATE_POINTS);
    if p % 2 == 0 {
        p - 1
    } else {
        p
    }
}

/// Calls `f` on every point of the lattice `{-r..r}^n` with `p` points per axis.
fn for_each_state(n: usize, p: usize, r: f64, mut f: impl FnMut(&[f64]) -> Result<()>) -> Result<()> {
    let mut idx = vec![0usize; n];
    let mut y = vec![0.0; n];
    let coord = |a: usize| -r + 2.0 * r * a as f64 / (p - 1) as f64;
    loop {
        for (c, v) in y.iter_mut().enumerate() {
            *v = coord(idx[c]);
        }
        f(&y)?;
        let mut c = 0;
        loop {
            if c == n {
                return Ok(());
            }
            idx[c] += 1;
            if idx[c] < p {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

fn check(v: f64, what: &str, at: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            what: what.into(),
            at: at(),
        })
    }
}

/// Samples `|∇_U F|` and `|∇_V H|` by centered differences on a lattice over
/// `[0, l] × [0, T]` and the state box, returning maxima inflated by 10%.
pub fn estimate_lipschitz(sys: &FrozenSystem, horizon: f64, box_radius: f64) -> Result<LipschitzEstimate> {
    if !(box_radius > 0.0 && box_radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("box radius must be positive, got {box_radius}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let n = sys.n;
    let p = state_points(n);
    let s = SPACE_TIME_POINTS;
    let x_at = |a: usize| sys.l * a as f64 / (s - 1) as f64;
    let t_at = |b: usize| horizon * b as f64 / (s - 1) as f64;

    let raw_l_f = if sys.meta.f_zero {
        0.0
    } else {
        let maxima: Vec<f64> = (0..s * s)
            .into_par_iter()
            .map(|ab| -> Result<f64> {
                let (x, t) = (x_at(ab / s), t_at(ab % s));
                let mut g = vec![0.0; n];
                let mut best = 0.0f64;
                for_each_state(n, p, box_radius, |y| {
                    for i in 0..n {
                        sys.grad_f(i, x, t, y, &mut g);
                        for &d in &g {
                            best = best.max(check(d.abs(), "gradient of F", || format!("x = {x}, t = {t}, y = {y:?}"))?);
                        }
                    }
                    Ok(())
                })?;
                Ok(best)
            })
            .collect::<Result<_>>()?;
        maxima.into_iter().fold(0.0, f64::max)
    };

    let raw_l_h = if sys.meta.h_zero {
        0.0
    } else {
        let maxima: Vec<f64> = (0..s)
            .into_par_iter()
            .map(|b| -> Result<f64> {
                let t = t_at(b);
                let mut g = vec![0.0; n];
                let mut best = 0.0f64;
                for_each_state(n, p, box_radius, |z| {
                    for i in 0..n {
                        sys.grad_h(i, t, z, &mut g);
                        for &d in &g {
                            best = best.max(check(d.abs(), "gradient of H", || format!("t = {t}, z = {z:?}"))?);
                        }
                    }
                    Ok(())
                })?;
                Ok(best)
            })
            .collect::<Result<_>>()?;
        maxima.into_iter().fold(0.0, f64::max)
    };

    let mut e_lambda_10 = 0.0f64;
    for i in 0..n {
        for a in 0..LAMBDA_POINTS {
            let x = sys.l * a as f64 / (LAMBDA_POINTS - 1) as f64;
            for b in 0..LAMBDA_POINTS {
                let t = horizon * b as f64 / (LAMBDA_POINTS - 1) as f64;
                let d = sys.lambda_x(i, x, t).abs();
                e_lambda_10 = e_lambda_10.max(check(d, "x-derivative of the speed", || format!("x = {x}, t = {t}"))?);
            }
        }
    }

    Ok(LipschitzEstimate {
        l_f: INFLATION * raw_l_f,
        l_h: INFLATION * raw_l_h,
        e_lambda_10,
        raw_l_f,
        raw_l_h,
        box_radius,
        state_points: p,
    })
}
