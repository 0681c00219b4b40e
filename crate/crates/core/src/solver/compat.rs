//! Support conditions on the data: `A` vanishes near both ends of the strip
//! and `H(t, 0)` vanishes near `t = 0`.

use serde::{Deserialize, Serialize};

/// Values at or below this magnitude count as zero.
pub const VANISH_TOL: f64 = 1e-12;
/// Lattice intervals across `[0, l]` and `[0, T]`.
const SCAN_INTERVALS: usize = 4000;

/// Support margins of one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentCompat {
    pub component: usize,
    /// Width of the zero stretch of `A_i` next to `x = 0`.
    pub a_margin_left: f64,
    /// Width of the zero stretch of `A_i` next to `x = l`.
    pub a_margin_right: f64,
    /// Width of the zero stretch of `H_i(·, 0)` next to `t = 0`.
    pub h_margin: f64,
    pub a_pass: bool,
    pub h_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatReport {
    pub passed: bool,
    pub components: Vec<ComponentCompat>,
    /// Lattice spacing in `x`; margins are resolved to this step.
    pub x_step: f64,
    pub t_step: f64,
}

impl CompatReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.components {
            if !c.a_pass {
                out.push(format!(
                    "A_{} does not vanish near the ends (margins {} and {})",
                    c.component + 1,
                    c.a_margin_left,
                    c.a_margin_right
                ));
            }
            if !c.h_pass {
                out.push(format!("H_{}(t, 0) does not vanish near t = 0", c.component + 1));
            }
        }
        out
    }
}

/// Length of the leading stretch of `values` that vanishes, in steps.
fn zero_run(values: impl Iterator<Item = f64>) -> usize {
    values.take_while(|v| v.abs() <= VANISH_TOL).count()
}

/// Scans `A_i` on `[0, l]` and `H_i(t, 0)` on `[0, horizon]`.
///
/// A margin counts as present once at least one lattice step beyond the end
/// vanishes; a field vanishing on the whole lattice reports the full width.
pub fn check_compatibility(sys: &crate::system::FrozenSystem, horizon: f64) -> CompatReport {
    let n = sys.n;
    let m = SCAN_INTERVALS;
    let dx = sys.l / m as f64;
    let dt = horizon / m as f64;
    let zero = vec![0.0; n];
    let width = |run: usize, step: f64| -> f64 { run.saturating_sub(1).min(m) as f64 * step };
    let components = (0..n)
        .map(|i| {
            let left = zero_run((0..=m).map(|a| sys.a(i, a as f64 * dx)));
            let right = zero_run((0..=m).rev().map(|a| sys.a(i, a as f64 * dx)));
            let h = if sys.meta.h_zero {
                m + 1
            } else {
                zero_run((0..=m).map(|b| sys.h(i, b as f64 * dt, &zero)))
            };
            ComponentCompat {
                component: i,
                a_margin_left: width(left, dx).min(sys.l),
                a_margin_right: width(right, dx).min(sys.l),
                h_margin: width(h, dt),
                a_pass: left >= 2 && right >= 2,
                h_pass: h >= 2,
            }
        })
        .collect::<Vec<_>>();
    let passed = components.iter().all(|c| c.a_pass && c.h_pass);
    CompatReport {
        passed,
        components,
        x_step: dx,
        t_step: dt,
    }
}
