//! Resolvent `f - lambda H f = h` for one-dimensional linearly controlled
//! gradient flows, with `H f = b f' + a (f')^2 / 2` (drift `b`, inverse metric `a`).
//!
//! Control form: `H f = sup_u (b + u) f' - u^2 / (2a)`. The scheme is upwind in
//! the total velocity `beta = b + u`, with state constraints at both ends, and
//! is solved by policy iteration (one tridiagonal solve per sweep).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{numerical, usage, Result};
use crate::hj::viscosity::GridFunction;
use crate::math;
use crate::point::StatePoint;
use crate::spaces::{make_cir, CirDescriptor, CirSpace, QuadraticSpace};

/// Controlled one-dimensional dynamics `x' = drift(x) + u` with running cost
/// `u^2 / (2 mobility(x))`.
pub trait ControlModel1d {
    fn drift(&self, x: f64) -> f64;
    fn mobility(&self, x: f64) -> f64;
}

impl ControlModel1d for CirSpace {
    fn drift(&self, x: f64) -> f64 {
        self.mu() - x
    }
    fn mobility(&self, x: f64) -> f64 {
        x
    }
}

impl ControlModel1d for QuadraticSpace {
    fn drift(&self, x: f64) -> f64 {
        self.drift_1d(x)
    }
    fn mobility(&self, _x: f64) -> f64 {
        1.0
    }
}

#[derive(Clone, Debug)]
pub struct ResolventSolution {
    pub f: GridFunction,
    /// Optimal control `u = beta - b` per node (natural-coordinate velocity).
    pub policy: GridFunction,
    pub residual: f64,
    pub lambda: f64,
    pub iterations: usize,
}

/// Upwind Hamiltonian at node `i` and the maximizing total velocity.
fn node_hamiltonian(model: &dyn ControlModel1d, xs: &[f64], f: &[f64], i: usize) -> (f64, f64) {
    let n = xs.len();
    let b = model.drift(xs[i]);
    let a = model.mobility(xs[i]);
    let mut best = (-b * b / (2.0 * a), 0.0);
    if i + 1 < n {
        let p = (f[i + 1] - f[i]) / (xs[i + 1] - xs[i]);
        let beta = b + a * p;
        if beta > 0.0 {
            let v = b * p + 0.5 * a * p * p;
            if v > best.0 {
                best = (v, beta);
            }
        }
    }
    if i > 0 {
        let p = (f[i] - f[i - 1]) / (xs[i] - xs[i - 1]);
        let beta = b + a * p;
        if beta < 0.0 {
            let v = b * p + 0.5 * a * p * p;
            if v > best.0 {
                best = (v, beta);
            }
        }
    }
    best
}

/// `max_i |f_i - lambda H_i(f) - h_i|`.
pub fn bellman_residual(model: &dyn ControlModel1d, xs: &[f64], lambda: f64, f: &[f64], h: &[f64]) -> f64 {
    (0..xs.len()).map(|i| (f[i] - lambda * node_hamiltonian(model, xs, f, i).0 - h[i]).abs()).fold(0.0, f64::max)
}

pub fn solve_resolvent_1d(model: &dyn ControlModel1d, xs: &[f64], lambda: f64, h: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, Vec<f64>, f64, usize)> {
    let n = xs.len();
    if n < 3 || h.len() != n {
        return Err(usage("resolvent grid needs >= 3 nodes and matching data"));
    }
    if !(lambda > 0.0) {
        return Err(usage("lambda must be positive"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("resolvent grid must be strictly increasing"));
    }
    if xs.iter().any(|&x| !(model.mobility(x) > 0.0)) {
        return Err(usage("mobility must be positive on the grid"));
    }
    // u = 0 is admissible at both ends (drift points inward), so it starts the iteration.
    let mut beta: Vec<f64> = xs.iter().map(|&x| model.drift(x)).collect();
    beta[0] = beta[0].max(0.0);
    beta[n - 1] = beta[n - 1].min(0.0);
    let mut f = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let b = model.drift(xs[i]);
            let a = model.mobility(xs[i]);
            let cost = (beta[i] - b) * (beta[i] - b) / (2.0 * a);
            rhs[i] = h[i] - lambda * cost;
            if beta[i] > 0.0 {
                let w = lambda * beta[i] / (xs[i + 1] - xs[i]);
                diag[i] += w;
                upper[i] = -w;
            } else if beta[i] < 0.0 {
                let w = -lambda * beta[i] / (xs[i] - xs[i - 1]);
                diag[i] += w;
                lower[i] = -w;
            }
        }
        f = math::solve_tridiagonal(&lower, &diag, &upper, &rhs);
        let mut changed = 0.0f64;
        for i in 0..n {
            let (_, bnew) = node_hamiltonian(model, xs, &f, i);
            changed = changed.max((bnew - beta[i]).abs());
            beta[i] = bnew;
        }
        residual = bellman_residual(model, xs, lambda, &f, h);
        if residual <= tol && changed <= 1e-9 {
            let policy = xs.iter().zip(&beta).map(|(&x, bt)| bt - model.drift(x)).collect();
            return Ok((f, policy, residual, it));
        }
    }
    Err(numerical(format!("policy iteration did not converge in {max_iter} sweeps"), residual))
}

/// Uniform grid on `[lo, hi]` as state points.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<StatePoint> {
    math::linspace(lo, hi, n).into_iter().map(StatePoint::scalar).collect()
}

/// Uniform grid on the CIR truncation `[x_lo, x_hi]`.
pub fn cir_grid(desc: &CirDescriptor, n: usize) -> Vec<StatePoint> {
    uniform_grid(desc.x_lo, desc.x_hi, n)
}

/// Solves the resolvent on a given 1-D grid and packages the result.
pub fn solve_resolvent(model: &dyn ControlModel1d, lambda: f64, h: &GridFunction, tol: f64) -> Result<ResolventSolution> {
    let xs: Vec<f64> = h.grid.iter().map(|p| p.x()).collect();
    let (f, policy, residual, iterations) = solve_resolvent_1d(model, &xs, lambda, &h.values, tol, 500)?;
    Ok(ResolventSolution {
        f: GridFunction::new(h.grid.clone(), f)?,
        policy: GridFunction::new(h.grid.clone(), policy)?,
        residual,
        lambda,
        iterations,
    })
}

/// CIR resolvent on the uniform `n_grid` grid over `[x_lo, x_hi]`; `h` must live on that grid.
pub fn solve_resolvent_cir(desc: &CirDescriptor, lambda: f64, h: &GridFunction, n_grid: usize, tol: f64) -> Result<ResolventSolution> {
    let space = make_cir(*desc)?;
    let grid = cir_grid(desc, n_grid);
    if h.grid.len() != n_grid || h.grid.iter().zip(&grid).any(|(a, b)| (a.x() - b.x()).abs() > 1e-12 * (1.0 + b.x())) {
        return Err(usage("h must be sampled on the uniform n_grid grid over [x_lo, x_hi]"));
    }
    solve_resolvent(&space, lambda, h, tol)
}
