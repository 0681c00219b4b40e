//! Per-slab tensor grids and off-grid evaluation.

use crate::interp::{InterpOrder, Stencil, UniformAxis};

/// Node layout of one slab: `nx + 1` nodes on `[0, l]`, `nt + 1` levels on
/// `[t0, t0 + nt dt]`, level 0 being the slab floor.
#[derive(Debug, Clone)]
pub struct SlabGeometry {
    pub n: usize,
    pub nx: usize,
    pub nt: usize,
    pub l: f64,
    pub t0: f64,
    pub dt: f64,
    pub x_axis: UniformAxis,
    pub t_axis: UniformAxis,
    pub order: InterpOrder,
}

impl SlabGeometry {
    pub fn new(n: usize, nx: usize, l: f64, t0: f64, dt: f64, nt: usize, order: InterpOrder) -> Self {
        Self {
            n,
            nx,
            nt,
            l,
            t0,
            dt,
            x_axis: UniformAxis::new(0.0, l, nx + 1),
            t_axis: UniformAxis {
                origin: t0,
                step: dt,
                len: nt + 1,
            },
            order,
        }
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_axis.point(j)
    }

    #[inline]
    pub fn t(&self, m: usize) -> f64 {
        self.t_axis.point(m)
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.nt)
    }

    /// Index of a path, for `m ≥ 1`.
    #[inline]
    pub fn path_index(&self, i: usize, m: usize, j: usize) -> usize {
        (i * self.nt + (m - 1)) * (self.nx + 1) + j
    }

    pub fn path_count(&self) -> usize {
        self.n * self.nt * (self.nx + 1)
    }

    /// Node index of the boundary where component `i` leaves.
    #[inline]
    pub fn outgoing_node(&self, left_moving: bool) -> usize {
        if left_moving {
            0
        } else {
            self.nx
        }
    }

    pub fn x_stencil(&self, x: f64) -> Stencil {
        self.x_axis.stencil(x, self.order)
    }

    pub fn t_stencil(&self, t: f64) -> Stencil {
        self.t_axis.stencil(t, self.order)
    }
}

/// Values of all components at all nodes of one slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabField {
    pub n: usize,
    pub nx: usize,
    pub nt: usize,
    /// `values[(m n + i)(nx + 1) + j]`.
    pub values: Vec<f64>,
}

impl SlabField {
    pub fn zeros(n: usize, nx: usize, nt: usize) -> Self {
        Self {
            n,
            nx,
            nt,
            values: vec![0.0; (nt + 1) * n * (nx + 1)],
        }
    }

    /// Every level set to the floor row `floor[i (nx + 1) + j]`.
    pub fn constant_in_time(n: usize, nx: usize, nt: usize, floor: &[f64]) -> Self {
        let mut f = Self::zeros(n, nx, nt);
        for m in 0..=nt {
            f.level_mut(m).copy_from_slice(floor);
        }
        f
    }

    #[inline]
    pub fn idx(&self, m: usize, i: usize, j: usize) -> usize {
        (m * self.n + i) * (self.nx + 1) + j
    }

    #[inline]
    pub fn get(&self, m: usize, i: usize, j: usize) -> f64 {
        self.values[self.idx(m, i, j)]
    }

    #[inline]
    pub fn set(&mut self, m: usize, i: usize, j: usize, v: f64) {
        let k = self.idx(m, i, j);
        self.values[k] = v;
    }

    #[inline]
    pub fn row(&self, m: usize, i: usize) -> &[f64] {
        let s = self.idx(m, i, 0);
        &self.values[s..s + self.nx + 1]
    }

    /// All components at level `m`, `[i (nx + 1) + j]`.
    pub fn level(&self, m: usize) -> &[f64] {
        let s = self.idx(m, 0, 0);
        &self.values[s..s + self.n * (self.nx + 1)]
    }

    pub fn level_mut(&mut self, m: usize) -> &mut [f64] {
        let s = self.idx(m, 0, 0);
        let w = self.n * (self.nx + 1);
        &mut self.values[s..s + w]
    }

    /// Component `i` at `x` on level `m`.
    #[inline]
    pub fn at_level(&self, m: usize, i: usize, sx: &Stencil) -> f64 {
        sx.apply(self.row(m, i))
    }

    /// Component `i` at node `j` and off-level time, from the time stencil.
    #[inline]
    pub fn at_column(&self, i: usize, j: usize, st: &Stencil) -> f64 {
        let stride = self.n * (self.nx + 1);
        st.apply_strided(&self.values, i * (self.nx + 1) + j, stride)
    }

    /// Component `i` at an arbitrary point by separable interpolation.
    pub fn at_point(&self, i: usize, sx: &Stencil, st: &Stencil) -> f64 {
        let mut acc = 0.0;
        for a in 0..st.width {
            acc += st.weights[a] * sx.apply(self.row(st.start + a, i));
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `max |self − other|` over levels `1..=nt`.
    pub fn max_diff_above_floor(&self, other: &SlabField) -> f64 {
        let s = self.idx(1, 0, 0);
        let mut best = 0.0f64;
        for (x, y) in self.values[s..].iter().zip(&other.values[s..]) {
            let d = (x - y).abs();
            if d.is_nan() {
                return f64::NAN;
            }
            best = best.max(d);
        }
        best
    }
}
