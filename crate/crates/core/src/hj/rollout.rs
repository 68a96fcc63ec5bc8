//! Lower bound for the discounted control problem
//! `sup int_0^inf e^{-t/lambda} [h(rho(t))/lambda - |u(t)|^2/2] dt`, `rho' = -grad E(rho) + u`,
//! by simulating a piecewise-constant feedback policy.
//!
//! The policy is greedy with respect to a semi-Lagrangian value iteration on a
//! chart grid; the reported value is the reward actually collected by the
//! simulated trajectory, so it never exceeds the true value beyond quadrature error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{numerical, usage, Result, Error};
use crate::math;
use crate::point::StatePoint;
use crate::space::Space;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RolloutConfig {
    /// Chart velocities available on each step.
    pub control_grid: Vec<f64>,
    pub dt: f64,
    /// Simulated horizon; the tail beyond it is bounded below by `min h e^{-T/lambda}`.
    pub horizon: f64,
    /// Natural-coordinate truncation `[lo, hi]` of the state.
    pub domain: (f64, f64),
    /// Chart nodes for the value iteration.
    pub n_chart: usize,
    /// RK4 substeps per control step.
    pub substeps: usize,
}

impl RolloutConfig {
    pub fn new(control_grid: Vec<f64>, dt: f64, horizon: f64, domain: (f64, f64)) -> Self {
        RolloutConfig { control_grid, dt, horizon, domain, n_chart: 801, substeps: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.control_grid.is_empty() || self.control_grid.iter().any(|v| !v.is_finite()) {
            return Err(usage("control_grid must be a non-empty list of finite values"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(usage("dt must be positive"));
        }
        if !(self.horizon >= self.dt) {
            return Err(usage("horizon must be at least dt"));
        }
        if !(self.domain.0 < self.domain.1) {
            return Err(usage("domain must satisfy lo < hi"));
        }
        if self.n_chart < 3 || self.substeps == 0 {
            return Err(usage("n_chart must be >= 3 and substeps >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RolloutResult {
    pub value: f64,
    /// Number of steps on which the trajectory left the truncation and was clipped.
    pub warnings: usize,
}

struct Model<'a> {
    space: &'a dyn Space,
    lo: f64,
    hi: f64,
}

impl Model<'_> {
    fn clip(&self, y: f64) -> (f64, bool) {
        let mut v = [y];
        self.space.project_chart(&mut v);
        let c = v[0].clamp(self.lo, self.hi);
        (c, (c - y).abs() > 1e-12 * (1.0 + y.abs()))
    }

    fn velocity(&self, y: f64, v: f64) -> Result<f64> {
        let (yc, _) = self.clip(y);
        let g = self.space.chart_gradient(&[yc]).ok_or_else(|| numerical(format!("energy gradient undefined at chart point {yc}"), f64::NAN))?;
        Ok(-g[0] + v)
    }

    /// RK4 over `[0, dt]` in `substeps` pieces; returns the end point, the
    /// discounted integral of `h` (trapezoid per substep, from local time 0) and a clip flag.
    fn step<H: Fn(f64) -> f64>(&self, y0: f64, v: f64, dt: f64, substeps: usize, lambda: f64, h: &H) -> Result<(f64, f64, bool)> {
        let s = dt / substeps as f64;
        let mut y = y0;
        let mut clipped = false;
        let mut acc = 0.0;
        let mut hy = h(y);
        for k in 0..substeps {
            let k1 = self.velocity(y, v)?;
            let k2 = self.velocity(y + 0.5 * s * k1, v)?;
            let k3 = self.velocity(y + 0.5 * s * k2, v)?;
            let k4 = self.velocity(y + s * k3, v)?;
            let (yn, c) = self.clip(y + s / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
            clipped |= c;
            let hn = h(yn);
            let (t0, t1) = (k as f64 * s, (k + 1) as f64 * s);
            acc += 0.5 * s * (libm::exp(-t0 / lambda) * hy + libm::exp(-t1 / lambda) * hn) / lambda;
            y = yn;
            hy = hn;
        }
        Ok((y, acc, clipped))
    }
}

fn interp(grid: &[f64], vals: &[f64], y: f64) -> f64 {
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let s = ((y - grid[0]) / h).clamp(0.0, (n - 1) as f64);
    let k = (libm::floor(s) as usize).min(n - 2);
    let w = s - k as f64;
    (1.0 - w) * vals[k] + w * vals[k + 1]
}

/// Rollout value from `start` for a one-dimensional space.
pub fn value_by_rollout(space: &dyn Space, lambda: f64, h: &dyn Fn(&StatePoint) -> f64, start: &StatePoint, cfg: &RolloutConfig) -> Result<RolloutResult> {
    cfg.validate()?;
    if !(lambda > 0.0) {
        return Err(usage("lambda must be positive"));
    }
    if space.dimension() != 1 {
        return Err(Error::Unsupported(format!("rollout needs a one-dimensional space, {} has dimension {}", space.id(), space.dimension())));
    }
    space.validate(start)?;
    let (lo_p, hi_p) = (StatePoint::scalar(cfg.domain.0), StatePoint::scalar(cfg.domain.1));
    space.validate(&lo_p)?;
    space.validate(&hi_p)?;
    let model = Model { space, lo: space.to_chart(&lo_p)[0], hi: space.to_chart(&hi_p)[0] };
    let hc = |y: f64| h(&space.from_chart(&[y]));

    let grid = math::linspace(model.lo, model.hi, cfg.n_chart);
    let h_min = grid.iter().map(|&y| hc(y)).fold(f64::INFINITY, f64::min).min(h(start));
    let disc = libm::exp(-cfg.dt / lambda);
    // cost of a constant control over one step, exactly discounted
    let cost = |v: f64| 0.5 * v * v * lambda * (1.0 - disc);

    // transitions (node, control) -> (end point, collected h reward)
    let nu = cfg.control_grid.len();
    let mut trans = vec![(0.0, 0.0); grid.len() * nu];
    for (i, &y) in grid.iter().enumerate() {
        for (j, &v) in cfg.control_grid.iter().enumerate() {
            let (yn, r, _) = model.step(y, v, cfg.dt, cfg.substeps, lambda, &hc)?;
            trans[i * nu + j] = (yn, r - cost(v));
        }
    }
    let h_sup = grid.iter().map(|&y| hc(y).abs()).fold(0.0, f64::max);
    let mut value = vec![0.0; grid.len()];
    let mut next = value.clone();
    let tol = 1e-10 * (1.0 + h_sup);
    let max_sweeps = 200 + libm::ceil(60.0 * lambda / cfg.dt) as usize;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut change = 0.0f64;
        for i in 0..grid.len() {
            let best = (0..nu).map(|j| {
                let (yn, r) = trans[i * nu + j];
                r + disc * interp(&grid, &value, yn)
            });
            let b = best.fold(f64::NEG_INFINITY, f64::max);
            change = change.max((b - value[i]).abs());
            next[i] = b;
        }
        core::mem::swap(&mut value, &mut next);
        if change <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(numerical("rollout value iteration did not converge", f64::NAN));
    }

    // forward greedy simulation, accumulating the reward actually earned
    let (mut y, _) = model.clip(space.to_chart(start)[0]);
    let steps = libm::ceil(cfg.horizon / cfg.dt) as usize;
    let mut total = 0.0;
    let mut warnings = 0;
    for k in 0..steps {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0, false);
        for &v in &cfg.control_grid {
            let (yn, r, c) = model.step(y, v, cfg.dt, cfg.substeps, lambda, &hc)?;
            let score = r - cost(v) + disc * interp(&grid, &value, yn);
            if score > best.0 {
                best = (score, yn, r - cost(v), c);
            }
        }
        total += libm::exp(-(k as f64) * cfg.dt / lambda) * best.2;
        y = best.1;
        if best.3 {
            warnings += 1;
        }
    }
    let t_end = steps as f64 * cfg.dt;
    total += h_min * libm::exp(-t_end / lambda);
    Ok(RolloutResult { value: total, warnings })
}
