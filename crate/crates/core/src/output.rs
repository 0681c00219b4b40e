//! Deterministic CSV and JSON renderings of results.
//!
//! Floats use the shortest round-trip representation, so identical inputs
//! give identical bytes.

use std::fmt::Write;

use serde::Serialize;

use crate::analysis::{NonlinearityClass, SweepResult, UniquenessResult};
use crate::characteristics::CharTrace;
use crate::mollifier::Mollifier;
use crate::numfmt::fmt_f64;
use crate::solver::SolutionGrid;

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// `x, t, U_i` over every node, 0-based `i`, header `U{i+1}`.
pub fn field_csv(grid: &SolutionGrid, i: usize) -> String {
    level_csv(grid, &format!("U{}", i + 1), |g, j| grid.get(g, i, j))
}

/// `x, t, ∂_x U_i` when the derivative was solved.
pub fn derivative_csv(grid: &SolutionGrid, i: usize) -> Option<String> {
    let d = grid.derivative.as_ref()?;
    Some(level_csv(grid, &format!("dU{}_dx", i + 1), |g, j| d[grid.idx(g, i, j)]))
}

fn level_csv(grid: &SolutionGrid, name: &str, value: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::with_capacity(grid.levels() * grid.x_nodes.len() * 40);
    let _ = writeln!(out, "x,t,{name}");
    let xs: Vec<String> = grid.x_nodes.iter().map(|&x| fmt_f64(x)).collect();
    for (g, &t) in grid.t_nodes.iter().enumerate() {
        let ts = fmt_f64(t);
        for (j, xs) in xs.iter().enumerate() {
            let _ = writeln!(out, "{xs},{ts},{}", fmt_f64(value(g, j)));
        }
    }
    out
}

/// `t, V1, …, Vn` at every level.
pub fn boundary_csv(grid: &SolutionGrid) -> String {
    let mut out = String::new();
    let mut head = vec!["t".to_string()];
    head.extend((1..=grid.n).map(|c| format!("V{c}")));
    row(&mut out, &head);
    for (g, &t) in grid.t_nodes.iter().enumerate() {
        let mut cells = vec![fmt_f64(t)];
        cells.extend(grid.boundary_at(g).iter().map(|&v| fmt_f64(v)));
        row(&mut out, &cells);
    }
    out
}

/// One row per ε: sup-norms, plan constants and status.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from(
        "eps,sup_norm,probe_sup,q0,q0_t,l_f,slabs,iterations,max_ratio,apriori_bound,bound_satisfied,derivative_sup,derivative_bound,status\n",
    );
    for e in &sweep.entries {
        let status = e.failure.as_ref().map_or("ok".to_string(), |f| f.code.clone());
        let (q0, q0t, lf, slabs, its, ratio, bound, ok) = match &e.summary {
            Some(s) => (
                fmt_f64(s.q0),
                fmt_f64(s.q0_t),
                fmt_f64(s.l_f),
                s.slab_count.to_string(),
                s.iterations.iter().sum::<usize>().to_string(),
                fmt_f64(s.max_ratio),
                fmt_f64(s.apriori_bound),
                s.bound_satisfied.to_string(),
            ),
            None => Default::default(),
        };
        let (dm, db) = match &e.derivative {
            Some(d) => (fmt_f64(d.measured), fmt_f64(d.bound)),
            None => Default::default(),
        };
        row(
            &mut out,
            &[
                fmt_f64(e.eps),
                fmt_f64(e.sup),
                fmt_f64(e.probe_sup),
                q0,
                q0t,
                lf,
                slabs,
                its,
                ratio,
                bound,
                ok,
                dm,
                db,
                status,
            ],
        );
    }
    out
}

/// `eps, difference, sup_phi, sup_psi, status`.
pub fn uniqueness_csv(res: &UniquenessResult) -> String {
    let mut out = String::from("eps,difference,sup_phi,sup_psi,status\n");
    for e in &res.entries {
        let status = e.failure.as_ref().map_or("ok".to_string(), |f| f.code.clone());
        row(
            &mut out,
            &[
                fmt_f64(e.eps),
                fmt_f64(e.difference),
                fmt_f64(e.sup_phi),
                fmt_f64(e.sup_psi),
                status,
            ],
        );
    }
    out
}

/// `radius, grad_sup`.
pub fn classify_csv(c: &NonlinearityClass) -> String {
    let mut out = String::from("radius,grad_sup\n");
    for (r, g) in c.radii.iter().zip(&c.samples) {
        row(&mut out, &[fmt_f64(*r), fmt_f64(*g)]);
    }
    out
}

/// `x, phi, phi_prime` on `points` equally spaced samples across the support.
pub fn mollifier_csv(m: &Mollifier, points: usize) -> String {
    let mut out = String::from("x,phi,phi_prime\n");
    let r = m.radius();
    let points = points.max(2);
    for k in 0..points {
        let x = -r + 2.0 * r * k as f64 / (points - 1) as f64;
        row(&mut out, &[fmt_f64(x), fmt_f64(m.eval(x)), fmt_f64(m.derivative(x, 1))]);
    }
    out
}

/// `tau, xi` along a traced path.
pub fn trace_csv(t: &CharTrace) -> String {
    let mut out = String::from("tau,xi\n");
    for &(tau, xi) in &t.samples {
        row(&mut out, &[fmt_f64(tau), fmt_f64(xi)]);
    }
    out
}
