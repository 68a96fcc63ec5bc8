use alloc::format;
use alloc::vec::Vec;

use crate::error::{usage, Result};
use crate::ext::ExtReal;
use crate::hj::test_fn::{horizon_for, LowerEvaluator, LowerTestFunction, UpperEvaluator, UpperTestFunction};
use crate::point::StatePoint;
use crate::space::Space;

/// Values on a finite set of states.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Vec<StatePoint>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Vec<StatePoint>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(usage(format!("grid has {} points but {} values", grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(usage("grid function values must be finite"));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Vec<StatePoint>, f: impl Fn(&StatePoint) -> f64) -> Result<Self> {
        let values = grid.iter().map(&f).collect();
        GridFunction::new(grid, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to the nodes `idx`.
    pub fn subset(&self, idx: &[usize]) -> GridFunction {
        GridFunction { grid: idx.iter().map(|&i| self.grid[i].clone()).collect(), values: idx.iter().map(|&i| self.values[i]).collect() }
    }

    fn same_grid(&self, other: &GridFunction) -> bool {
        self.grid == other.grid
    }
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ViscosityRecord {
    pub test_function: usize,
    /// Grid index of the optimizer.
    pub node: usize,
    pub point: StatePoint,
    /// `u - lambda g - h` at the optimizer (`+inf`/`-inf` when g is infinite).
    pub value: ExtReal,
    pub pass: bool,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ViscosityReport {
    pub pass: bool,
    pub tol: f64,
    pub records: Vec<ViscosityRecord>,
}

impl ViscosityReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.pass).count()
    }
}

/// Subsolution test: at the grid argmax of `u - f` for each upper test
/// function, `u - lambda g - h <= tol`.
pub fn verify_subsolution(
    space: &dyn Space,
    u: &GridFunction,
    tfs: &[UpperTestFunction],
    lambda: f64,
    h: &GridFunction,
    tol: f64,
    flow_dt: f64,
) -> Result<ViscosityReport> {
    if !u.same_grid(h) {
        return Err(usage("u and h must share a grid"));
    }
    let mut records = Vec::with_capacity(tfs.len());
    for (k, tf) in tfs.iter().enumerate() {
        let horizon = horizon_for(space, &u.grid, &tf.mu)?;
        let ev = UpperEvaluator::new(space, tf, flow_dt, horizon)?;
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in u.grid.iter().enumerate() {
            let (f, _) = ev.eval(p)?;
            let gap = u.values[i] - f;
            if best.map_or(true, |(_, b)| gap > b) {
                best = Some((i, gap));
            }
        }
        let (i, _) = best.ok_or_else(|| usage("empty grid"))?;
        let (_, g) = ev.eval(&u.grid[i])?;
        let value = -(g * lambda) + (u.values[i] - h.values[i]);
        let pass = value <= ExtReal::Finite(tol);
        records.push(ViscosityRecord { test_function: k, node: i, point: u.grid[i].clone(), value, pass });
    }
    Ok(ViscosityReport { pass: records.iter().all(|r| r.pass), tol, records })
}

/// Supersolution test: at the grid argmin of `v - f` for each lower test
/// function, `v - lambda g - h >= -tol`.
pub fn verify_supersolution(
    space: &dyn Space,
    v: &GridFunction,
    tfs: &[LowerTestFunction],
    lambda: f64,
    h: &GridFunction,
    tol: f64,
    flow_dt: f64,
) -> Result<ViscosityReport> {
    if !v.same_grid(h) {
        return Err(usage("v and h must share a grid"));
    }
    let mut records = Vec::with_capacity(tfs.len());
    for (k, tf) in tfs.iter().enumerate() {
        let horizon = horizon_for(space, &v.grid, &tf.pi)?;
        let ev = LowerEvaluator::new(space, tf, flow_dt, horizon)?;
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in v.grid.iter().enumerate() {
            let (f, _) = ev.eval(p)?;
            let gap = v.values[i] - f;
            if best.map_or(true, |(_, b)| gap < b) {
                best = Some((i, gap));
            }
        }
        let (i, _) = best.ok_or_else(|| usage("empty grid"))?;
        let (_, g) = ev.eval(&v.grid[i])?;
        let value = -(g * lambda) + (v.values[i] - h.values[i]);
        let pass = value >= ExtReal::Finite(-tol);
        records.push(ViscosityRecord { test_function: k, node: i, point: v.grid[i].clone(), value, pass });
    }
    Ok(ViscosityReport { pass: records.iter().all(|r| r.pass), tol, records })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ComparisonReport {
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `max(u - v) <= max(h_up - h_low) + tol` on a common grid.
pub fn check_comparison(u: &GridFunction, v: &GridFunction, h_up: &GridFunction, h_low: &GridFunction, tol: f64) -> Result<ComparisonReport> {
    if !(u.same_grid(v) && u.same_grid(h_up) && u.same_grid(h_low)) {
        return Err(usage("comparison needs a common grid"));
    }
    let sup_diff = |a: &GridFunction, b: &GridFunction| a.values.iter().zip(&b.values).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
    let lhs = sup_diff(u, v);
    let rhs = sup_diff(h_up, h_low);
    Ok(ComparisonReport { lhs, rhs, tol, pass: lhs <= rhs + tol })
}
