//! Backward paths from every slab node and the quadrature points along them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{trace_levels, Exit, ExitKind};
use crate::error::Result;
use crate::solver::field::{SlabField, SlabGeometry};
use crate::system::FrozenSystem;

/// Quadrature along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Trapezoid rule on the exit point, the crossed time levels and the node.
    #[default]
    Trapezoid,
    /// Two-point Gauss rule per sub-interval on a Hermite re-sampling of the path.
    Gauss,
}

/// Where a quadrature point sits relative to the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Loc {
    Exit,
    Level(usize),
    Node,
    Off,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct QPoint {
    pub tau: f64,
    pub xi: f64,
    pub w: f64,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Path {
    pub exit: Exit,
    /// Lowest level strictly above the exit.
    pub first_level: usize,
    /// Offset into `xi` (trapezoid) or `gauss`.
    pub start: usize,
    pub len: usize,
}

/// Traces from every node `(i, m ≥ 1, j)` of a slab down to its floor.
pub(crate) struct SlabPaths {
    pub paths: Vec<Path>,
    pub xi: Vec<f64>,
    pub gauss: Vec<(f64, f64, f64)>,
    pub with_points: bool,
    pub quadrature: Quadrature,
}

const GAUSS_2: f64 = 0.577_350_269_189_625_8;

impl SlabPaths {
    /// `with_points` keeps ξ at the crossed levels; without it only exits are stored.
    pub fn build(
        sys: &FrozenSystem,
        geom: &SlabGeometry,
        with_points: bool,
        quadrature: Quadrature,
        tol: f64,
    ) -> Result<Self> {
        let levels_desc: Vec<f64> = (1..geom.nt).rev().map(|m| geom.t(m)).collect();
        let raw: Vec<(Exit, Vec<f64>)> = (0..geom.path_count())
            .into_par_iter()
            .map(|p| {
                let (i, m, j) = unpack(geom, p);
                let lv: &[f64] = if with_points {
                    &levels_desc[geom.nt - m..]
                } else {
                    &[]
                };
                let lt = trace_levels(sys, i, geom.x(j), geom.t(m), geom.t0, lv, tol)?;
                let mut xi = lt.xi;
                xi.reverse();
                Ok((lt.exit, xi))
            })
            .collect::<Result<_>>()?;
        let mut paths = Vec::with_capacity(raw.len());
        let mut xi_buf = Vec::new();
        let mut gauss = Vec::new();
        for (p, (exit, xi)) in raw.into_iter().enumerate() {
            let (i, m, j) = unpack(geom, p);
            let first_level = m - xi.len();
            match quadrature {
                Quadrature::Trapezoid => {
                    paths.push(Path {
                        exit,
                        first_level,
                        start: xi_buf.len(),
                        len: xi.len(),
                    });
                    xi_buf.extend_from_slice(&xi);
                }
                Quadrature::Gauss => {
                    let start = gauss.len();
                    if with_points && exit.tau < geom.t(m) {
                        let mut samples = Vec::with_capacity(xi.len() + 2);
                        samples.push((exit.tau, exit.xi));
                        for (k, &x) in xi.iter().enumerate() {
                            samples.push((geom.t(first_level + k), x));
                        }
                        samples.push((geom.t(m), geom.x(j)));
                        for w in samples.windows(2) {
                            let (ta, xa) = w[0];
                            let (tb, xb) = w[1];
                            let h = tb - ta;
                            if h <= 0.0 {
                                continue;
                            }
                            let da = sys.lambda(i, xa, ta);
                            let db = sys.lambda(i, xb, tb);
                            for g in [-GAUSS_2, GAUSS_2] {
                                let th = 0.5 * (1.0 + g);
                                let h00 = 2.0 * th.powi(3) - 3.0 * th * th + 1.0;
                                let h10 = th.powi(3) - 2.0 * th * th + th;
                                let h01 = -2.0 * th.powi(3) + 3.0 * th * th;
                                let h11 = th.powi(3) - th * th;
                                let x = h00 * xa + h10 * h * da + h01 * xb + h11 * h * db;
                                gauss.push((ta + th * h, x.clamp(0.0, geom.l), 0.5 * h));
                            }
                        }
                    }
                    paths.push(Path {
                        exit,
                        first_level,
                        start,
                        len: gauss.len() - start,
                    });
                }
            }
        }
        Ok(Self {
            paths,
            xi: xi_buf,
            gauss,
            with_points,
            quadrature,
        })
    }

    /// Number of quadrature points of path `p` ending at level `m`.
    pub fn point_count(&self, geom: &SlabGeometry, p: usize, m: usize) -> usize {
        let path = &self.paths[p];
        if !self.with_points || path.exit.tau >= geom.t(m) {
            return 0;
        }
        match self.quadrature {
            Quadrature::Trapezoid => path.len + 2,
            Quadrature::Gauss => path.len,
        }
    }

    /// Visits the quadrature points of path `p`, ending at node `(m, j)`.
    #[inline]
    pub fn for_each_point(&self, geom: &SlabGeometry, p: usize, m: usize, j: usize, mut f: impl FnMut(QPoint)) {
        let path = &self.paths[p];
        let t_node = geom.t(m);
        if !self.with_points || path.exit.tau >= t_node {
            return;
        }
        match self.quadrature {
            Quadrature::Trapezoid => {
                let k_last = path.len + 1;
                let tau_of = |k: usize| -> f64 {
                    if k == 0 {
                        path.exit.tau
                    } else if k == k_last {
                        t_node
                    } else {
                        geom.t(path.first_level + k - 1)
                    }
                };
                let mut prev = tau_of(0);
                let mut cur = prev;
                for k in 0..=k_last {
                    let next = if k < k_last { tau_of(k + 1) } else { cur };
                    let w = 0.5 * (next - prev);
                    let (xi, loc) = if k == 0 {
                        (path.exit.xi, Loc::Exit)
                    } else if k == k_last {
                        (geom.x(j), Loc::Node)
                    } else {
                        (self.xi[path.start + k - 1], Loc::Level(path.first_level + k - 1))
                    };
                    f(QPoint { tau: cur, xi, w, loc });
                    prev = cur;
                    cur = next;
                }
            }
            Quadrature::Gauss => {
                for &(tau, xi, w) in &self.gauss[path.start..path.start + path.len] {
                    f(QPoint { tau, xi, w, loc: Loc::Off });
                }
            }
        }
    }
}

/// `(i, m, j)` of path index `p`.
#[inline]
pub(crate) fn unpack(geom: &SlabGeometry, p: usize) -> (usize, usize, usize) {
    let j = p % (geom.nx + 1);
    let r = p / (geom.nx + 1);
    let m = r % geom.nt + 1;
    let i = r / geom.nt;
    (i, m, j)
}

/// Initial data of a slab: an exact closure or samples on the floor level.
#[derive(Clone, Copy)]
pub enum FloorData<'a> {
    Exact(&'a (dyn Fn(usize, f64) -> f64 + Sync)),
    /// `[i (nx + 1) + j]`.
    Samples(&'a [f64]),
}

impl FloorData<'_> {
    pub fn value(&self, geom: &SlabGeometry, i: usize, x: f64) -> f64 {
        match self {
            FloorData::Exact(f) => f(i, x),
            FloorData::Samples(s) => {
                let row = &s[i * (geom.nx + 1)..(i + 1) * (geom.nx + 1)];
                geom.x_stencil(x).apply(row)
            }
        }
    }

    /// Floor row sampled at the nodes.
    pub fn row(&self, geom: &SlabGeometry) -> Vec<f64> {
        match self {
            FloorData::Samples(s) => s.to_vec(),
            FloorData::Exact(f) => (0..geom.n)
                .flat_map(|i| (0..=geom.nx).map(move |j| (i, j)))
                .map(|(i, j)| f(i, geom.x(j)))
                .collect(),
        }
    }
}

/// Field values of all components at a quadrature point.
#[inline]
pub(crate) fn field_at(
    geom: &SlabGeometry,
    field: &SlabField,
    path: &Path,
    floor_vec: &[f64],
    q: &QPoint,
    m: usize,
    j: usize,
    out: &mut [f64],
) {
    match q.loc {
        Loc::Exit => match path.exit.kind {
            ExitKind::Initial => out.copy_from_slice(floor_vec),
            ExitKind::Left | ExitKind::Right => {
                let jb = if path.exit.kind == ExitKind::Left { 0 } else { geom.nx };
                let st = geom.t_stencil(q.tau);
                for (c, o) in out.iter_mut().enumerate() {
                    *o = field.at_column(c, jb, &st);
                }
            }
        },
        Loc::Level(mm) => {
            let sx = geom.x_stencil(q.xi);
            for (c, o) in out.iter_mut().enumerate() {
                *o = field.at_level(mm, c, &sx);
            }
        }
        Loc::Node => {
            for (c, o) in out.iter_mut().enumerate() {
                *o = field.get(m, c, j);
            }
        }
        Loc::Off => {
            let sx = geom.x_stencil(q.xi);
            let st = geom.t_stencil(q.tau);
            for (c, o) in out.iter_mut().enumerate() {
                *o = field.at_point(c, &sx, &st);
            }
        }
    }
}
