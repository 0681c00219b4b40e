//! Chaining slabs over the horizon with a bootstrapped Lipschitz box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::compat::check_compatibility;
use crate::solver::derivative::derivative_with_paths;
use crate::solver::field::SlabGeometry;
use crate::solver::lipschitz::{estimate_lipschitz, LipschitzEstimate};
use crate::solver::paths::{FloorData, SlabPaths};
use crate::solver::plan::{compute_apriori_bound, geometric_bound, plan_from_constants, q_m, SlabPlan};
use crate::solver::slab::{solve_with_paths, SlabSolution};
use crate::solver::{SolutionGrid, SolveConfig, SolveReport, SupEntry};
use crate::system::FrozenSystem;

/// Lattice points per axis for `F(x, t, 0)`.
const SOURCE_POINTS: usize = 33;
/// Lattice points for `A` and `H(t, 0)` per spatial grid interval.
const DATA_REFINE: usize = 8;
const MIN_DATA_POINTS: usize = 4001;

/// Sup-norms of the data entering the a priori bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataMaxima {
    /// `max |A_i(x)|`.
    pub max_a: f64,
    /// `max |F_i(x, t, 0)|`.
    pub max_f0: f64,
    /// `max |H_i(t, 0)|`.
    pub max_h0: f64,
}

/// Samples the data maxima on lattices that contain every node of a grid
/// with `nx` intervals.
pub fn data_maxima(sys: &FrozenSystem, horizon: f64, nx: usize) -> DataMaxima {
    let n = sys.n;
    let zero = vec![0.0; n];
    let mut pts = (DATA_REFINE * nx.max(1)).max(1);
    while pts + 1 < MIN_DATA_POINTS {
        pts *= 2;
    }
    let mut max_a = 0.0f64;
    let mut max_h0 = 0.0f64;
    for i in 0..n {
        for a in 0..=pts {
            max_a = max_a.max(sys.a(i, sys.l * a as f64 / pts as f64).abs());
        }
        if !sys.meta.h_zero {
            for b in 0..=pts {
                max_h0 = max_h0.max(sys.h(i, horizon * b as f64 / pts as f64, &zero).abs());
            }
        }
    }
    let mut max_f0 = 0.0f64;
    if !sys.meta.f_zero {
        let s = SOURCE_POINTS;
        for i in 0..n {
            for a in 0..s {
                let x = sys.l * a as f64 / (s - 1) as f64;
                for b in 0..s {
                    let t = horizon * b as f64 / (s - 1) as f64;
                    max_f0 = max_f0.max(sys.f(i, x, t, &zero).abs());
                }
            }
        }
    }
    DataMaxima { max_a, max_f0, max_h0 }
}

struct Chain {
    u: Vec<SlabSolution>,
    w: Vec<SlabSolution>,
    sup: f64,
}

fn is_no_convergence(e: &Error) -> bool {
    match e {
        Error::NoConvergence { .. } => true,
        Error::Slab { source, .. } => is_no_convergence(source),
        _ => false,
    }
}

/// Levels per slab and time step for a slab of length `t_slab`.
fn time_grid(t_slab: f64, dt_target: f64) -> (usize, f64) {
    let nt = ((t_slab / dt_target) * (1.0 - 1e-12)).ceil().max(4.0) as usize;
    (nt, t_slab / nt as f64)
}

fn run_chain(sys: &FrozenSystem, plan: &SlabPlan, lip: &LipschitzEstimate, cfg: &SolveConfig, dt_target: f64) -> Result<Chain> {
    let n = sys.n;
    let (nt, dt) = time_grid(plan.t_slab, dt_target);
    let exact_a = |i: usize, x: f64| sys.a(i, x);
    let exact_w = |i: usize, x: f64| sys.a_prime(i, x);
    let with_points = !sys.meta.f_zero || cfg.derivative;
    let q1_t = q_m(n, lip.l_f, lip.l_h, lip.e_lambda_10, 1) * plan.t_slab;
    let mut u: Vec<SlabSolution> = Vec::with_capacity(plan.slab_count);
    let mut w: Vec<SlabSolution> = Vec::new();
    let mut sup = 0.0f64;
    for s in 0..plan.slab_count {
        let wrap = |e: Error| Error::Slab {
            slab: s,
            source: Box::new(e),
        };
        let geom = SlabGeometry::new(n, cfg.nx, sys.l, s as f64 * plan.t_slab, dt, nt, cfg.picard.interp);
        let paths = SlabPaths::build(sys, &geom, with_points, cfg.picard.quadrature, cfg.trace_tol).map_err(wrap)?;
        let prev_u = u.last().map(|p| p.field.level(nt).to_vec());
        let u_floor = match &prev_u {
            Some(v) => FloorData::Samples(v),
            None => FloorData::Exact(&exact_a),
        };
        let mut sol = solve_with_paths(sys, geom, &paths, u_floor, &cfg.picard, s).map_err(wrap)?;
        sol.report.q_t = plan.q0 * plan.t_slab;
        sup = sup.max(sol.field.max_abs());
        if cfg.derivative {
            let prev_w = w.last().map(|p: &SlabSolution| p.field.level(nt).to_vec());
            let w_floor = match &prev_w {
                Some(v) => FloorData::Samples(v),
                None => FloorData::Exact(&exact_w),
            };
            let mut ws = derivative_with_paths(sys, &paths, &sol, u_floor, w_floor, &cfg.picard).map_err(wrap)?;
            ws.report.q_t = q1_t;
            w.push(ws);
        }
        u.push(sol);
    }
    Ok(Chain { u, w, sup })
}

/// Solves the problem on `[0, l] × [0, horizon]`.
///
/// The Lipschitz box starts at `max(1, 2 maxA, 2 maxH0)`. Whenever a slab
/// fails to converge or the solution leaves the box, the box is doubled, the
/// constants re-estimated and the whole horizon re-planned and re-solved.
pub fn solve(sys: &FrozenSystem, horizon: f64, cfg: &SolveConfig) -> Result<(SolutionGrid, SolveReport)> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let lambda_floor = sys.check_speeds(horizon)?;
    let compatibility = check_compatibility(sys, horizon);
    if cfg.require_compatible && !compatibility.passed {
        return Err(Error::Incompatible(compatibility.failures().join("; ")));
    }
    let data = data_maxima(sys, horizon, cfg.nx);
    let gb = geometric_bound(sys, horizon)?.min(cfg.max_slab.unwrap_or(f64::INFINITY));
    let dx = sys.l / cfg.nx as f64;
    let dt_target = cfg.dt.unwrap_or_else(|| dx / sys.max_speed(horizon));
    let mut box_r = cfg
        .box_radius
        .unwrap_or_else(|| 1.0f64.max(2.0 * data.max_a).max(2.0 * data.max_h0));
    let mut restarts = 0;
    let mut lip = estimate_lipschitz(sys, horizon, box_r)?;
    loop {
        let plan = plan_from_constants(
            horizon,
            sys.n,
            lip.l_f,
            lip.l_h,
            lip.e_lambda_10,
            u32::from(cfg.derivative),
            gb,
            cfg.theta,
        )?;
        let outcome = run_chain(sys, &plan, &lip, cfg, dt_target);
        let accept = match &outcome {
            Ok(chain) => chain.sup <= box_r || restarts >= cfg.max_restarts,
            Err(e) if is_no_convergence(e) && restarts < cfg.max_restarts => false,
            Err(_) => true,
        };
        if !accept {
            let next = estimate_lipschitz(sys, horizon, 2.0 * box_r)?;
            let same = next.l_f == lip.l_f && next.l_h == lip.l_h;
            if !(same && outcome.is_ok()) {
                box_r *= 2.0;
                lip = next;
                restarts += 1;
                continue;
            }
        }
        let chain = outcome?;
        return Ok(assemble(sys, horizon, chain, plan, lip, data, compatibility, lambda_floor, restarts, cfg));
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    sys: &FrozenSystem,
    horizon: f64,
    chain: Chain,
    plan: SlabPlan,
    lip: LipschitzEstimate,
    data: DataMaxima,
    compatibility: crate::solver::CompatReport,
    lambda_floor: f64,
    restarts: usize,
    cfg: &SolveConfig,
) -> (SolutionGrid, SolveReport) {
    let n = sys.n;
    let w = cfg.nx + 1;
    let nt = chain.u[0].geometry.nt;
    let levels = chain.u.len() * nt + 1;
    let stitch = |slabs: &[SlabSolution]| -> Vec<f64> {
        let mut out = Vec::with_capacity(levels * n * w);
        out.extend_from_slice(slabs[0].field.level(0));
        for s in slabs {
            for m in 1..=nt {
                out.extend_from_slice(s.field.level(m));
            }
        }
        out
    };
    let values = stitch(&chain.u);
    let derivative = if chain.w.is_empty() { None } else { Some(stitch(&chain.w)) };
    let mut t_nodes = Vec::with_capacity(levels);
    t_nodes.push(chain.u[0].geometry.t0);
    for s in &chain.u {
        for m in 1..=nt {
            t_nodes.push(s.geometry.t(m));
        }
    }
    let x_nodes = chain.u[0].geometry.x_axis.points();
    let mut boundary_record = Vec::with_capacity(levels * n);
    for g in 0..levels {
        for i in 0..n {
            let j = if sys.is_left(i) { 0 } else { cfg.nx };
            boundary_record.push(values[(g * n + i) * w + j]);
        }
    }
    let dx = sys.l / cfg.nx as f64;
    let dt = chain.u[0].geometry.dt;
    let sup_table = sup_table(&values, levels, n, w, dx, dt);
    let grid = SolutionGrid {
        n,
        x_nodes,
        t_nodes,
        levels_per_slab: nt,
        values,
        boundary_record,
        interp: cfg.picard.interp,
        sup_table,
        derivative,
    };
    let sup_achieved = grid.sup();
    let apriori_bound = compute_apriori_bound(&data, n, lip.l_h, &plan).unwrap_or(f64::INFINITY);
    let slabs: Vec<_> = chain.u.into_iter().map(|s| s.report).collect();
    let derivative_slabs: Vec<_> = chain.w.into_iter().map(|s| s.report).collect();
    let report = SolveReport {
        horizon,
        plan,
        lipschitz: lip,
        data,
        compatibility,
        lambda_floor,
        iterations: slabs.iter().map(|s| s.iterations).collect(),
        contraction_ratios: slabs.iter().map(|s| s.max_ratio).collect(),
        slabs,
        derivative_slabs,
        apriori_bound,
        sup_achieved,
        bound_satisfied: sup_achieved <= apriori_bound,
        restarts,
    };
    (grid, report)
}

/// `max |∂_x^a ∂_t^b U|` for `a + b ≤ 2` by finite differences: centered in
/// the interior, one-sided at the edges for first derivatives, interior only
/// for second derivatives.
fn sup_table(values: &[f64], levels: usize, n: usize, w: usize, dx: f64, dt: f64) -> Vec<SupEntry> {
    let at = |g: usize, i: usize, j: usize| values[(g * n + i) * w + j];
    let d1 = |a: f64, b: f64, h: f64| (b - a) / h;
    let mut m = [0.0f64; 6];
    for g in 0..levels {
        for i in 0..n {
            for j in 0..w {
                let u = at(g, i, j);
                m[0] = m[0].max(u.abs());
                let ux = if j == 0 {
                    d1(u, at(g, i, 1), dx)
                } else if j == w - 1 {
                    d1(at(g, i, j - 1), u, dx)
                } else {
                    d1(at(g, i, j - 1), at(g, i, j + 1), 2.0 * dx)
                };
                m[1] = m[1].max(ux.abs());
                if levels > 1 {
                    let ut = if g == 0 {
                        d1(u, at(1, i, j), dt)
                    } else if g == levels - 1 {
                        d1(at(g - 1, i, j), u, dt)
                    } else {
                        d1(at(g - 1, i, j), at(g + 1, i, j), 2.0 * dt)
                    };
                    m[2] = m[2].max(ut.abs());
                }
                let inner_x = j > 0 && j + 1 < w;
                let inner_t = g > 0 && g + 1 < levels;
                if inner_x {
                    let uxx = (at(g, i, j + 1) - 2.0 * u + at(g, i, j - 1)) / (dx * dx);
                    m[3] = m[3].max(uxx.abs());
                }
                if inner_x && inner_t {
                    let uxt = (at(g + 1, i, j + 1) - at(g + 1, i, j - 1) - at(g - 1, i, j + 1) + at(g - 1, i, j - 1))
                        / (4.0 * dx * dt);
                    m[4] = m[4].max(uxt.abs());
                }
                if inner_t {
                    let utt = (at(g + 1, i, j) - 2.0 * u + at(g - 1, i, j)) / (dt * dt);
                    m[5] = m[5].max(utt.abs());
                }
            }
        }
    }
    let orders = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
    orders
        .iter()
        .zip(m)
        .map(|(&(a, b), value)| SupEntry {
            dx_order: a,
            dt_order: b,
            value,
        })
        .collect()
}
