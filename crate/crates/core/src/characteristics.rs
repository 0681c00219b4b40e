//! Backward characteristic tracing and the geometric slab bound.
//!
//! A characteristic of component `i` through `(x, t)` solves
//! `dξ/dτ = Λ_i(ξ, τ)`, `ξ(t) = x`. It is integrated backward in the variable
//! `s = t − τ` with an embedded Dormand–Prince 5(4) pair until it meets
//! `ξ = 0`, `ξ = l` or the floor time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::FrozenSystem;

/// Where a backward characteristic leaves the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    /// Reached the floor time (`τ = 0` for a global trace).
    Initial,
    /// Reached `ξ = 0`.
    Left,
    /// Reached `ξ = l`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exit {
    pub tau: f64,
    pub xi: f64,
    pub kind: ExitKind,
}

/// One backward path with its exit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharTrace {
    pub component: usize,
    pub seed: (f64, f64),
    /// `(τ, ξ)` from the seed down to the exit, `τ` decreasing.
    pub samples: Vec<(f64, f64)>,
    pub exit_time: f64,
    pub exit_xi: f64,
    pub exit_kind: ExitKind,
    pub tol: f64,
}

/// ξ at prescribed time levels below the seed, stopping at the exit.
#[derive(Debug, Clone)]
pub struct LevelTrace {
    pub exit: Exit,
    /// `xi[j]` belongs to `levels[j]`; only levels strictly above the exit are filled.
    pub xi: Vec<f64>,
}

const MAX_STEPS: usize = 200_000;
const MIN_STEP: f64 = 1e-14;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand–Prince step of `y' = g(s, y)`; returns `(y_new, error, g(s+h, y_new))`.
fn dp_step(g: &dyn Fn(f64, f64) -> f64, s: f64, y: f64, k1: f64, h: f64) -> (f64, f64, f64) {
    let k2 = g(s + C2 * h, y + h * A21 * k1);
    let k3 = g(s + C3 * h, y + h * (A31 * k1 + A32 * k2));
    let k4 = g(s + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = g(s + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    let k6 = g(s + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    let y1 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = g(s + h, y1);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    (y1, err.abs(), k7)
}

fn next_step(h: f64, err: f64, tol: f64) -> f64 {
    let fac = if err == 0.0 {
        5.0
    } else {
        (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
    };
    h * fac
}

/// Root of `f` on `[a, b]` with `f(a)` and `f(b)` of opposite sign (Illinois).
fn illinois(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Backward integration engine shared by the public tracing entry points.
///
/// `stops` are values of `s = t − τ` (increasing) where the path must be
/// sampled exactly; `on_step` receives accepted `(s, ξ, dξ/ds)` triples.
fn integrate_backward(
    sys: &FrozenSystem,
    i: usize,
    x: f64,
    t: f64,
    floor: f64,
    tol: f64,
    stops: &[f64],
    stop_values: &mut Vec<f64>,
    on_step: &mut dyn FnMut(f64, f64, f64),
) -> Result<Exit> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("trace tolerance must be positive, got {tol}")));
    }
    let l = sys.l;
    if !(-1e-12..=l + 1e-12).contains(&x) || t < floor - 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "seed ({x}, {t}) outside [0, {l}] x [{floor}, inf)"
        )));
    }
    let x = x.clamp(0.0, l);
    let s_max = (t - floor).max(0.0);
    let g = |s: f64, y: f64| -sys.lambda(i, y, t - s);
    let mut k1 = g(0.0, x);
    if !k1.is_finite() {
        return Err(Error::NonFinite {
            what: format!("lambda[{i}]"),
            at: format!("({x}, {t})"),
        });
    }
    on_step(0.0, x, k1);
    if s_max == 0.0 {
        return Ok(Exit { tau: t, xi: x, kind: ExitKind::Initial });
    }
    // Seeds on a boundary whose backward path leaves at once.
    let edge = 1e-12 * l.max(1.0);
    if x <= edge && k1 < 0.0 {
        return Ok(Exit { tau: t, xi: 0.0, kind: ExitKind::Left });
    }
    if x >= l - edge && k1 > 0.0 {
        return Ok(Exit { tau: t, xi: l, kind: ExitKind::Right });
    }

    let step_tol = 0.1 * tol;
    let mut s = 0.0;
    let mut y = x;
    let mut h = (0.1 * s_max).min(if k1 != 0.0 { 0.1 * l / k1.abs() } else { s_max });
    let mut next_stop = 0usize;
    while next_stop < stops.len() && stops[next_stop] <= 0.0 {
        stop_values.push(x);
        next_stop += 1;
    }
    for _ in 0..MAX_STEPS {
        let target = if next_stop < stops.len() {
            stops[next_stop].min(s_max)
        } else {
            s_max
        };
        let mut hh = h.min(target - s);
        let snapped = hh >= target - s;
        if hh < MIN_STEP * s_max.max(1.0) && !snapped {
            return Err(Error::StepUnderflow {
                component: i,
                xi: y,
                tau: t - s,
            });
        }
        hh = hh.max(0.0);
        let (y1, err, k7) = dp_step(&g, s, y, k1, hh);
        if !y1.is_finite() {
            return Err(Error::NonFinite {
                what: format!("characteristic of component {i}"),
                at: format!("tau = {}", t - s),
            });
        }
        if err > step_tol && hh > MIN_STEP * s_max.max(1.0) {
            h = next_step(hh, err, step_tol);
            continue;
        }
        let s1 = if snapped { target } else { s + hh };
        if y1 < 0.0 || y1 > l {
            let wall = if y1 < 0.0 { 0.0 } else { l };
            let (s0, y0, k0) = (s, y, k1);
            let gap = |sig: f64| {
                if sig <= 0.0 {
                    return y0 - wall;
                }
                dp_step(&g, s0, y0, k0, sig).0 - wall
            };
            let sig = illinois(&gap, 0.0, hh, y0 - wall, y1 - wall, 0.1 * tol);
            let s_hit = s0 + sig;
            if s_hit >= s_max - 0.1 * tol {
                let yf = dp_step(&g, s0, y0, k0, s_max - s0).0.clamp(0.0, l);
                on_step(s_max, yf, g(s_max, yf));
                return Ok(Exit { tau: floor, xi: yf, kind: ExitKind::Initial });
            }
            on_step(s_hit, wall, g(s_hit, wall));
            let kind = if wall == 0.0 { ExitKind::Left } else { ExitKind::Right };
            return Ok(Exit { tau: t - s_hit, xi: wall, kind });
        }
        s = s1;
        y = y1;
        k1 = k7;
        on_step(s, y, k1);
        if snapped && next_stop < stops.len() && target == stops[next_stop].min(s_max) {
            if stops[next_stop] <= s_max {
                stop_values.push(y);
                next_stop += 1;
            }
        }
        if s >= s_max {
            return Ok(Exit { tau: floor, xi: y, kind: ExitKind::Initial });
        }
        // A step cut short by a stop says nothing about the admissible size.
        h = if snapped {
            h.max(next_step(hh, err, step_tol))
        } else {
            next_step(hh, err, step_tol)
        };
    }
    Err(Error::StepUnderflow {
        component: i,
        xi: y,
        tau: t - s,
    })
}

/// Traces component `i` backward from `(x, t)` down to `τ = 0`.
pub fn trace_characteristic(sys: &FrozenSystem, i: usize, x: f64, t: f64, tol: f64) -> Result<CharTrace> {
    trace_to_floor(sys, i, x, t, 0.0, tol)
}

/// Traces component `i` backward from `(x, t)` down to `τ = floor`.
///
/// Samples are densified with cubic Hermite interpolation so that linear
/// interpolation between consecutive samples stays within `tol`.
pub fn trace_to_floor(sys: &FrozenSystem, i: usize, x: f64, t: f64, floor: f64, tol: f64) -> Result<CharTrace> {
    if i >= sys.n {
        return Err(Error::InvalidArgument(format!("component {i} out of range (n = {})", sys.n)));
    }
    let mut raw: Vec<(f64, f64, f64)> = Vec::new();
    let exit = integrate_backward(sys, i, x, t, floor, tol, &[], &mut Vec::new(), &mut |s, y, d| {
        raw.push((s, y, d))
    })?;
    let mut samples = Vec::with_capacity(raw.len());
    for w in raw.windows(2) {
        let (s0, y0, d0) = w[0];
        let (s1, y1, d1) = w[1];
        samples.push((t - s0, y0));
        let h = s1 - s0;
        if h <= 0.0 {
            continue;
        }
        let curv = ((d1 - d0) / h).abs();
        let m = ((h * h * curv / (8.0 * tol)).sqrt().ceil() as usize).min(10_000);
        for j in 1..m {
            let th = j as f64 / m as f64;
            let h00 = 2.0 * th.powi(3) - 3.0 * th * th + 1.0;
            let h10 = th.powi(3) - 2.0 * th * th + th;
            let h01 = -2.0 * th.powi(3) + 3.0 * th * th;
            let h11 = th.powi(3) - th * th;
            let y = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
            samples.push((t - (s0 + th * h), y.clamp(0.0, sys.l)));
        }
    }
    if let Some(&(s, y, _)) = raw.last() {
        samples.push((t - s, y));
    }
    if let Some(last) = samples.last_mut() {
        *last = (exit.tau, exit.xi);
    }
    Ok(CharTrace {
        component: i,
        seed: (x, t),
        samples,
        exit_time: exit.tau,
        exit_xi: exit.xi,
        exit_kind: exit.kind,
        tol,
    })
}

/// Traces from `(x, t)` down to `floor`, recording ξ at each of `levels`
/// (descending, all below `t`) that lies above the exit.
pub fn trace_levels(
    sys: &FrozenSystem,
    i: usize,
    x: f64,
    t: f64,
    floor: f64,
    levels: &[f64],
    tol: f64,
) -> Result<LevelTrace> {
    let stops: Vec<f64> = levels.iter().map(|&tau| t - tau).collect();
    let mut xi = Vec::with_capacity(levels.len());
    let exit = integrate_backward(sys, i, x, t, floor, tol, &stops, &mut xi, &mut |_, _, _| {})?;
    // Levels at or below the exit are not part of the path.
    let keep = levels[..xi.len()].iter().take_while(|&&lv| lv > exit.tau).count();
    xi.truncate(keep);
    Ok(LevelTrace { exit, xi })
}

/// Forward integration of `y' = g(τ, y)` from `τ0` over `duration`.
fn integrate_forward(g: &dyn Fn(f64, f64) -> f64, tau0: f64, y0: f64, duration: f64, tol: f64) -> f64 {
    if duration <= 0.0 {
        return y0;
    }
    let mut s = tau0;
    let end = tau0 + duration;
    let mut y = y0;
    let mut k1 = g(s, y);
    let mut h = 0.1 * duration;
    for _ in 0..MAX_STEPS {
        let hh = h.min(end - s);
        let (y1, err, k7) = dp_step(g, s, y, k1, hh);
        if err > tol && hh > MIN_STEP {
            h = next_step(hh, err, tol);
            continue;
        }
        s = if hh >= end - s { end } else { s + hh };
        y = y1;
        k1 = k7;
        if s >= end {
            break;
        }
        h = next_step(hh, err, tol);
    }
    y
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeometricBound {
    /// First Δ at which the fastest inward characteristics from the two ends meet.
    pub meeting: Option<f64>,
    /// `0.9 · meeting`, or the horizon when they never meet.
    pub bound: f64,
}

pub const SAFETY: f64 = 0.9;
const LAUNCHES: usize = 5;

/// Largest slab length from `τ0` for which characteristics launched from the
/// two ends during the slab cannot meet inside it.
pub fn slab_bound_geometric(sys: &FrozenSystem, tau0: f64, horizon: f64) -> Result<GeometricBound> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let tol = 1e-12;
    let n = sys.n;
    let k = sys.k;
    let l = sys.l;
    let right = |tau: f64, y: f64| -> f64 {
        (k..n).map(|i| sys.lambda(i, y, tau)).fold(f64::NEG_INFINITY, f64::max)
    };
    let left = |tau: f64, y: f64| -> f64 {
        (0..k).map(|i| sys.lambda(i, y, tau)).fold(f64::INFINITY, f64::min)
    };
    let separated = |delta: f64| -> bool {
        let end = tau0 + delta;
        (0..LAUNCHES).all(|j| {
            let launch = tau0 + delta * j as f64 / (LAUNCHES - 1) as f64;
            let d = end - launch;
            let xr = if k < n {
                integrate_forward(&right, launch, 0.0, d, tol)
            } else {
                0.0
            };
            let xl = integrate_forward(&left, launch, l, d, tol);
            xr < xl
        })
    };
    if separated(horizon) {
        return Ok(GeometricBound { meeting: None, bound: horizon });
    }
    let (mut lo, mut hi) = (0.0, horizon);
    while hi - lo > 1e-12 * horizon.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if separated(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let meeting = 0.5 * (lo + hi);
    Ok(GeometricBound {
        meeting: Some(meeting),
        bound: (SAFETY * meeting).min(horizon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn illinois_finds_root() {
        let f = |x: f64| x * x - 2.0;
        let r = illinois(&f, 0.0, 2.0, -2.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn forward_exponential() {
        let y = integrate_forward(&|_, y| y, 0.0, 1.0, 1.0, 1e-12);
        assert!((y - std::f64::consts::E).abs() < 1e-9);
    }
}
