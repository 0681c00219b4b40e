//! The linear integral system for `W = ∂_x U` with `U` frozen.
//!
//! Along a characteristic `W_i` obeys
//! `dW_i/dτ = Σ_c (∂_c F_i − δ_ic ∂_x Λ_i) W_c + ∂_x F_i`.
//! Paths leaving through a boundary start from the differentiated boundary
//! condition `W_i = r0 + Σ_c coef_c W_c(x_out(c), τ)`.

use rayon::prelude::*;

use crate::characteristics::ExitKind;
use crate::error::Result;
use crate::solver::engine::picard;
use crate::solver::field::{SlabField, SlabGeometry};
use crate::solver::paths::{field_at, FloorData, SlabPaths};
use crate::solver::slab::{boundary_record, floor_cache, scratch, SlabSolution};
use crate::solver::{PicardConfig, SlabReport};
use crate::system::FrozenSystem;

/// Solves for `∂_x U` on the slab of `u`.
///
/// `u_floor` must be the floor data `u` was solved from and `w_floor` its
/// `x`-derivative.
pub fn solve_derivative_slab(
    sys: &FrozenSystem,
    u: &SlabSolution,
    u_floor: FloorData,
    w_floor: FloorData,
    cfg: &PicardConfig,
    trace_tol: f64,
) -> Result<SlabSolution> {
    let paths = SlabPaths::build(sys, &u.geometry, true, cfg.quadrature, trace_tol)?;
    derivative_with_paths(sys, &paths, u, u_floor, w_floor, cfg)
}

/// Boundary start values of one path: `r0` and the coupling coefficients.
fn boundary_terms(
    sys: &FrozenSystem,
    geom: &SlabGeometry,
    u: &SlabField,
    i: usize,
    x_b: f64,
    jb: usize,
    tau: f64,
    coef: &mut [f64],
) -> f64 {
    let n = sys.n;
    let mut v = vec![0.0; n];
    let mut ub = vec![0.0; n];
    let mut uo = vec![0.0; n];
    let mut dh = vec![0.0; n];
    boundary_record(sys, geom, u, tau, &mut v);
    let st = geom.t_stencil(tau);
    for (c, o) in ub.iter_mut().enumerate() {
        *o = u.at_column(c, jb, &st);
    }
    sys.grad_h(i, tau, &v, &mut dh);
    let lam_i = sys.lambda(i, x_b, tau);
    let mut num = sys.f(i, x_b, tau, &ub) - sys.h_t(i, tau, &v);
    for c in 0..n {
        if dh[c] == 0.0 {
            coef[c] = 0.0;
            continue;
        }
        let jo = geom.outgoing_node(sys.is_left(c));
        let xo = geom.x(jo);
        for (d, o) in uo.iter_mut().enumerate() {
            *o = u.at_column(d, jo, &st);
        }
        num -= dh[c] * sys.f(c, xo, tau, &uo);
        coef[c] = dh[c] * sys.lambda(c, xo, tau) / lam_i;
    }
    num / lam_i
}

pub(crate) fn derivative_with_paths(
    sys: &FrozenSystem,
    paths: &SlabPaths,
    u: &SlabSolution,
    u_floor: FloorData,
    w_floor: FloorData,
    cfg: &PicardConfig,
) -> Result<SlabSolution> {
    let n = sys.n;
    let geom = &u.geometry;
    let uf = &u.field;
    let floor_u = floor_cache(sys, geom, paths, &u_floor);
    let floor_w = floor_cache(sys, geom, paths, &w_floor);
    let count = paths.paths.len();

    let mut offsets = Vec::with_capacity(count + 1);
    offsets.push(0usize);
    for p in 0..count {
        let (_, m, _) = crate::solver::paths::unpack(geom, p);
        offsets.push(offsets[p] + paths.point_count(geom, p, m));
    }

    // Per path: r0 and boundary coefficients, then (n + 1) integrand
    // coefficients per quadrature point.
    let per_path: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..count)
        .into_par_iter()
        .map(|p| {
            let (i, m, j) = crate::solver::paths::unpack(geom, p);
            let path = &paths.paths[p];
            let mut coef = vec![0.0; n];
            let r0 = match path.exit.kind {
                ExitKind::Initial => 0.0,
                kind => {
                    let jb = if kind == ExitKind::Left { 0 } else { geom.nx };
                    boundary_terms(sys, geom, uf, i, geom.x(jb), jb, path.exit.tau, &mut coef)
                }
            };
            let fu = &floor_u[p * n..(p + 1) * n];
            let mut pts = Vec::with_capacity((offsets[p + 1] - offsets[p]) * (n + 1));
            let mut y = vec![0.0; n];
            let mut g = vec![0.0; n];
            paths.for_each_point(geom, p, m, j, |q| {
                field_at(geom, uf, path, fu, &q, m, j, &mut y);
                sys.grad_f(i, q.xi, q.tau, &y, &mut g);
                g[i] -= sys.lambda_x(i, q.xi, q.tau);
                pts.extend_from_slice(&g);
                pts.push(sys.f_x(i, q.xi, q.tau, &y));
            });
            (r0, coef, pts)
        })
        .collect();
    let mut r0 = Vec::with_capacity(count);
    let mut bcoef = Vec::with_capacity(count * n);
    let mut icoef = Vec::with_capacity(offsets[count] * (n + 1));
    for (a, b, c) in per_path {
        r0.push(a);
        bcoef.extend_from_slice(&b);
        icoef.extend_from_slice(&c);
    }

    let init = SlabField::constant_in_time(n, geom.nx, geom.nt, &w_floor.row(geom));
    let left: Vec<bool> = (0..n).map(|i| sys.is_left(i)).collect();
    let node_value = |field: &SlabField, i: usize, m: usize, j: usize| -> f64 {
        let p = geom.path_index(i, m, j);
        let path = &paths.paths[p];
        let fw = &floor_w[p * n..(p + 1) * n];
        let r = match path.exit.kind {
            ExitKind::Initial => fw[i],
            _ => {
                let st = geom.t_stencil(path.exit.tau);
                let mut acc = r0[p];
                for c in 0..n {
                    let k = bcoef[p * n + c];
                    if k != 0.0 {
                        acc += k * field.at_column(c, geom.outgoing_node(left[c]), &st);
                    }
                }
                acc
            }
        };
        scratch(n, |w| {
            let mut acc = 0.0;
            let mut k = offsets[p];
            paths.for_each_point(geom, p, m, j, |q| {
                field_at(geom, field, path, fw, &q, m, j, w);
                let g = &icoef[k * (n + 1)..(k + 1) * (n + 1)];
                let mut s = g[n];
                for c in 0..n {
                    s += g[c] * w[c];
                }
                acc += q.w * s;
                k += 1;
            });
            r + acc
        })
    };
    let out = picard(geom, &left, init, cfg.tol, cfg.max_iter, node_value)?;
    let max_ratio = out.ratios.iter().cloned().fold(0.0, f64::max);
    Ok(SlabSolution {
        geometry: geom.clone(),
        field: out.field,
        report: SlabReport {
            index: u.report.index,
            t_start: geom.t0,
            t_end: geom.t_end(),
            levels: geom.nt,
            iterations: out.iterations,
            final_diff: *out.diffs.last().unwrap_or(&0.0),
            diffs: out.diffs,
            ratios: out.ratios,
            max_ratio,
            q_t: f64::NAN,
        },
    })
}
