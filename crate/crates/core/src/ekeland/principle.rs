//! Ekeland's variational principle on a finite set, checked exhaustively.

use alloc::format;

use crate::error::{usage, Result};

/// Objective `g` indexed by element (`-inf` allowed, `+inf` and NaN rejected),
/// penalty `b(y, x)` (nonnegative, zero on the diagonal, triangle inequality),
/// weight `delta` and starting element `x_hat`.
pub struct EkelandProblem<'a> {
    pub g: &'a [f64],
    pub b: &'a (dyn Fn(usize, usize) -> f64 + Sync),
    pub delta: f64,
    pub x_hat: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EkelandResult {
    pub x_delta: usize,
    /// Full scans performed; the number of moves is one less.
    pub iterations: usize,
}

fn check(p: &EkelandProblem) -> Result<()> {
    if p.g.is_empty() {
        return Err(usage("Ekeland problem needs at least one element"));
    }
    if p.x_hat >= p.g.len() {
        return Err(usage(format!("x_hat index {} out of range", p.x_hat)));
    }
    if p.g.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(usage("objective must be bounded above and not NaN"));
    }
    if p.g[p.x_hat] == f64::NEG_INFINITY {
        return Err(usage("objective is -inf at the starting element"));
    }
    if !(p.delta > 0.0 && p.delta.is_finite()) {
        return Err(usage("delta must be positive"));
    }
    Ok(())
}

/// `argmax_y G(y) - w B(y, x)` (first maximizer in index order).
fn penalized_argmax(p: &EkelandProblem, x: usize, w: f64) -> (usize, f64) {
    let mut best = (x, p.g[x]);
    for (y, &gy) in p.g.iter().enumerate() {
        if gy == f64::NEG_INFINITY || y == x {
            continue;
        }
        let v = gy - w * (p.b)(y, x);
        if v > best.1 {
            best = (y, v);
        }
    }
    best
}

/// From the current element, move to the maximizer of `G(y) - delta/2 B(y, x)`
/// whenever it strictly beats `G(x)`. `G` increases strictly, so this stops.
pub fn ekeland_optimize(p: &EkelandProblem) -> Result<EkelandResult> {
    check(p)?;
    let mut x = p.x_hat;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (y, v) = penalized_argmax(p, x, 0.5 * p.delta);
        if y == x || !(v > p.g[x]) {
            return Ok(EkelandResult { x_delta: x, iterations });
        }
        x = y;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EkelandReport {
    /// `G(x_hat) + delta/2 B(x_delta, x_hat) - G(x_delta)` (must be <= tol).
    pub invariant1: f64,
    /// `max_y G(y) - delta/2 B(y, x_delta) - G(x_delta)` (must be <= tol).
    pub invariant2: f64,
    /// `min_{y != x_delta} G(x_delta) - (G(y) - delta B(y, x_delta))` (must be > 0).
    pub uniqueness_margin: f64,
    /// When `G(x_hat) >= sup G - delta^2/2`: `B(x_delta, x_hat) - delta` (must be <= tol).
    pub consequence_a: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

pub fn verify_ekeland(p: &EkelandProblem, r: &EkelandResult, tol: f64) -> Result<EkelandReport> {
    check(p)?;
    let xd = r.x_delta;
    if xd >= p.g.len() {
        return Err(usage("x_delta out of range"));
    }
    let gd = p.g[xd];
    let invariant1 = p.g[p.x_hat] + 0.5 * p.delta * (p.b)(xd, p.x_hat) - gd;
    let mut invariant2 = f64::NEG_INFINITY;
    let mut margin = f64::INFINITY;
    let mut sup = f64::NEG_INFINITY;
    for (y, &gy) in p.g.iter().enumerate() {
        sup = sup.max(gy);
        if gy == f64::NEG_INFINITY {
            continue;
        }
        let b = (p.b)(y, xd);
        invariant2 = invariant2.max(gy - 0.5 * p.delta * b - gd);
        if y != xd {
            margin = margin.min(gd - (gy - p.delta * b));
        }
    }
    let consequence_a = (p.g[p.x_hat] >= sup - 0.5 * p.delta * p.delta).then(|| (p.b)(xd, p.x_hat) - p.delta);
    let pass = invariant1 <= tol && invariant2 <= tol && margin > 0.0 && consequence_a.map_or(true, |c| c <= tol);
    Ok(EkelandReport { invariant1, invariant2, uniqueness_margin: margin, consequence_a, tol, pass })
}
