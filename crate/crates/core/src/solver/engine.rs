//! Picard sweeps over one slab.
//!
//! Each sweep first updates the nodes on every component's outgoing boundary,
//! which determine `V`, then all remaining nodes against the refreshed `V`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::solver::field::{SlabField, SlabGeometry};

pub(crate) struct SweepOutcome {
    pub field: SlabField,
    pub iterations: usize,
    pub diffs: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Relative level below which successive differences are rounding noise.
const NOISE: f64 = 1e-12;

/// Iterates `node_value` to a fixed point starting from `init`.
///
/// `left[i]` tells whether component `i` leaves through `x = 0`.
pub(crate) fn picard<F>(
    geom: &SlabGeometry,
    left: &[bool],
    init: SlabField,
    tol: f64,
    max_iter: usize,
    node_value: F,
) -> Result<SweepOutcome>
where
    F: Fn(&SlabField, usize, usize, usize) -> f64 + Sync,
{
    let n = geom.n;
    let width = geom.nx + 1;
    let mut cur = init;
    let mut diffs = Vec::new();
    let mut ratios = Vec::new();
    let mut last_ratio = f64::NAN;
    for it in 1..=max_iter {
        let mut work = cur.clone();
        let outgoing: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|i| (1..=geom.nt).map(move |m| (i, m)))
            .map(|(i, m)| (i, m, geom.outgoing_node(left[i])))
            .collect();
        let vals: Vec<f64> = outgoing
            .par_iter()
            .map(|&(i, m, j)| node_value(&cur, i, m, j))
            .collect();
        for (&(i, m, j), v) in outgoing.iter().zip(vals) {
            work.set(m, i, j, v);
        }
        let mut next = work.clone();
        next.values
            .par_chunks_mut(width)
            .enumerate()
            .skip(n)
            .for_each(|(r, row)| {
                let m = r / n;
                let i = r % n;
                let skip = geom.outgoing_node(left[i]);
                for (j, v) in row.iter_mut().enumerate() {
                    if j != skip {
                        *v = node_value(&work, i, m, j);
                    }
                }
            });
        let diff = next.max_diff_above_floor(&cur);
        if !diff.is_finite() {
            return Err(Error::NonFinite {
                what: "Picard iterate".into(),
                at: format!("iteration {it}, slab starting at t = {}", geom.t0),
            });
        }
        let scale = next.max_abs().max(1.0);
        if let Some(&prev) = diffs.last() {
            if prev > NOISE * scale {
                last_ratio = diff / prev;
                ratios.push(last_ratio);
            }
        }
        diffs.push(diff);
        cur = next;
        if diff <= tol {
            return Ok(SweepOutcome {
                field: cur,
                iterations: it,
                diffs,
                ratios,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_diff: *diffs.last().unwrap_or(&f64::NAN),
        last_ratio,
    })
}
