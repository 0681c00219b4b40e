//! Separable Lagrange interpolation on uniform grids.

use serde::{Deserialize, Serialize};

/// Interpolation order used for off-grid evaluation along characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterpOrder {
    Linear,
    Cubic,
}

impl InterpOrder {
    pub fn from_order(order: u32) -> Option<Self> {
        match order {
            1 => Some(InterpOrder::Linear),
            3 => Some(InterpOrder::Cubic),
            _ => None,
        }
    }

    pub fn as_order(self) -> u32 {
        match self {
            InterpOrder::Linear => 1,
            InterpOrder::Cubic => 3,
        }
    }
}

/// Points within this fraction of a cell from a node return the node value
/// untouched, so node-aligned lookups are exact.
const SNAP: f64 = 1e-9;

/// Uniform 1-D grid `origin + j * step`, `j = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformAxis {
    pub origin: f64,
    pub step: f64,
    pub len: usize,
}

/// At most four (index, weight) pairs.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub start: usize,
    pub weights: [f64; 4],
    pub width: usize,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.width {
            acc += self.weights[k] * values[self.start + k];
        }
        acc
    }

    /// Same as [`apply`](Self::apply) but reads `values[offset + stride * idx]`.
    #[inline]
    pub fn apply_strided(&self, values: &[f64], offset: usize, stride: usize) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.width {
            acc += self.weights[k] * values[offset + stride * (self.start + k)];
        }
        acc
    }
}

impl UniformAxis {
    pub fn new(origin: f64, end: f64, len: usize) -> Self {
        assert!(len >= 2, "axis needs at least two points");
        Self {
            origin,
            step: (end - origin) / (len - 1) as f64,
            len,
        }
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        self.origin + self.step * j as f64
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.point(j)).collect()
    }

    /// Stencil for evaluating at `x`; `x` is clamped into the axis range.
    pub fn stencil(&self, x: f64, order: InterpOrder) -> Stencil {
        let last = (self.len - 1) as f64;
        let u = ((x - self.origin) / self.step).clamp(0.0, last);
        let m = (u.floor() as usize).min(self.len - 2);
        let frac = u - m as f64;
        if frac < SNAP {
            return Stencil::node(m);
        }
        if frac > 1.0 - SNAP {
            return Stencil::node(m + 1);
        }
        match order {
            InterpOrder::Linear => Stencil {
                start: m,
                weights: [1.0 - frac, frac, 0.0, 0.0],
                width: 2,
            },
            InterpOrder::Cubic if self.len >= 4 => {
                let start = m.saturating_sub(1).min(self.len - 4);
                let s = u - start as f64;
                Stencil {
                    start,
                    weights: cubic_weights(s),
                    width: 4,
                }
            }
            InterpOrder::Cubic => Stencil {
                start: m,
                weights: [1.0 - frac, frac, 0.0, 0.0],
                width: 2,
            },
        }
    }

    pub fn interpolate(&self, values: &[f64], x: f64, order: InterpOrder) -> f64 {
        debug_assert_eq!(values.len(), self.len);
        self.stencil(x, order).apply(values)
    }
}

impl Stencil {
    fn node(j: usize) -> Self {
        Stencil {
            start: j,
            weights: [1.0, 0.0, 0.0, 0.0],
            width: 1,
        }
    }
}

/// Lagrange weights for nodes 0, 1, 2, 3 evaluated at local coordinate `s`.
#[inline]
fn cubic_weights(s: f64) -> [f64; 4] {
    let a = s;
    let b = s - 1.0;
    let c = s - 2.0;
    let d = s - 3.0;
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}
