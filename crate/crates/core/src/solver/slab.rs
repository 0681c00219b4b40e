//! Picard iteration of the integral form on one slab.

use crate::characteristics::ExitKind;
use crate::error::Result;
use crate::solver::engine::picard;
use crate::solver::field::{SlabField, SlabGeometry};
use crate::solver::paths::{field_at, FloorData, SlabPaths};
use crate::solver::{PicardConfig, SlabReport};
use crate::system::FrozenSystem;

/// Converged values on one slab.
#[derive(Debug, Clone)]
pub struct SlabSolution {
    pub geometry: SlabGeometry,
    pub field: SlabField,
    pub report: SlabReport,
}

/// Runs `f` with a zeroed scratch buffer of length `n`.
#[inline]
pub(crate) fn scratch<R>(n: usize, f: impl FnOnce(&mut [f64]) -> R) -> R {
    if n <= 16 {
        let mut a = [0.0; 16];
        f(&mut a[..n])
    } else {
        let mut v = vec![0.0; n];
        f(&mut v)
    }
}

/// Boundary record `V(τ)` read from the outgoing columns of `field`.
#[inline]
pub(crate) fn boundary_record(sys: &FrozenSystem, geom: &SlabGeometry, field: &SlabField, tau: f64, out: &mut [f64]) {
    let st = geom.t_stencil(tau);
    for (c, o) in out.iter_mut().enumerate() {
        *o = field.at_column(c, geom.outgoing_node(sys.is_left(c)), &st);
    }
}

/// Floor values of all components at every floor exit, `[p n + c]`.
pub(crate) fn floor_cache(sys: &FrozenSystem, geom: &SlabGeometry, paths: &SlabPaths, floor: &FloorData) -> Vec<f64> {
    let n = sys.n;
    let mut out = vec![0.0; paths.paths.len() * n];
    for (p, path) in paths.paths.iter().enumerate() {
        if path.exit.kind == ExitKind::Initial {
            for c in 0..n {
                out[p * n + c] = floor.value(geom, c, path.exit.xi);
            }
        }
    }
    out
}

/// Solves the integral form on one slab by Picard iteration.
///
/// Each node takes `R_i U + ∫ F_i(ω_i, τ, U) dτ` along its backward path,
/// where `R_i U` is `H_i(t_i, V(t_i))` on a boundary exit and the floor data
/// on a floor exit. The first iterate holds the floor data constant in time.
pub fn picard_solve_slab(
    sys: &FrozenSystem,
    geom: SlabGeometry,
    floor: FloorData,
    cfg: &PicardConfig,
    trace_tol: f64,
    index: usize,
) -> Result<SlabSolution> {
    let paths = SlabPaths::build(sys, &geom, !sys.meta.f_zero, cfg.quadrature, trace_tol)?;
    solve_with_paths(sys, geom, &paths, floor, cfg, index)
}

pub(crate) fn solve_with_paths(
    sys: &FrozenSystem,
    geom: SlabGeometry,
    paths: &SlabPaths,
    floor: FloorData,
    cfg: &PicardConfig,
    index: usize,
) -> Result<SlabSolution> {
    let n = sys.n;
    let floor_u = floor_cache(sys, &geom, paths, &floor);
    let init = SlabField::constant_in_time(n, geom.nx, geom.nt, &floor.row(&geom));
    let left: Vec<bool> = (0..n).map(|i| sys.is_left(i)).collect();
    let g = &geom;
    let node_value = |field: &SlabField, i: usize, m: usize, j: usize| -> f64 {
        let p = g.path_index(i, m, j);
        let path = &paths.paths[p];
        let fv = &floor_u[p * n..(p + 1) * n];
        let r = match path.exit.kind {
            ExitKind::Initial => fv[i],
            _ => scratch(n, |v| {
                boundary_record(sys, g, field, path.exit.tau, v);
                sys.h(i, path.exit.tau, v)
            }),
        };
        if sys.meta.f_zero {
            return r;
        }
        scratch(n, |u| {
            let mut acc = 0.0;
            paths.for_each_point(g, p, m, j, |q| {
                field_at(g, field, path, fv, &q, m, j, u);
                acc += q.w * sys.f(i, q.xi, q.tau, u);
            });
            r + acc
        })
    };
    let out = picard(&geom, &left, init, cfg.tol, cfg.max_iter, node_value)?;
    let max_ratio = out.ratios.iter().cloned().fold(0.0, f64::max);
    let report = SlabReport {
        index,
        t_start: geom.t0,
        t_end: geom.t_end(),
        levels: geom.nt,
        iterations: out.iterations,
        final_diff: *out.diffs.last().unwrap_or(&0.0),
        diffs: out.diffs,
        ratios: out.ratios,
        max_ratio,
        q_t: f64::NAN,
    };
    Ok(SlabSolution {
        geometry: geom,
        field: out.field,
        report,
    })
}
