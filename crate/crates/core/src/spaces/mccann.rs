use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Direction of `s -> s F(1/s)` on the sampled grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Neither,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct McCannReport {
    pub pass: bool,
    /// Names of failed predicates.
    pub violations: Vec<String>,
    pub convex: bool,
    pub dual_convex: bool,
    /// Reported only; a decreasing map does not fail the check.
    pub dual_monotonicity: Monotonicity,
    pub superlinear: bool,
    pub doubling_constant: f64,
    pub vanishes_at_zero: bool,
    pub lower_growth_ok: bool,
}

/// Sampled McCann admissibility of an internal-energy integrand in one space
/// dimension, on a log-spaced grid of `(0, s_max]`.
pub fn mccann_check(f: &dyn Fn(f64) -> f64, s_max: f64) -> Result<McCannReport> {
    let grid = math::logspace(-8.0, libm::log10(s_max), 600);
    let vals: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
    if vals.iter().any(|v| !v.is_finite()) || !f(0.0).is_finite() {
        return Err(Error::Input("integrand produced a non-finite value on (0, s_max]".into()));
    }

    let convex = convex_on(&grid, &vals);

    // d = 1: s -> s F(1/s) on the same range
    let dual: Vec<f64> = grid.iter().map(|&s| s * f(1.0 / s)).collect();
    if dual.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("s F(1/s) is not finite on the sampled grid".into()));
    }
    let dual_convex = convex_on(&grid, &dual);
    let incr = dual.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
    let decr = dual.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    let dual_monotonicity = match (incr, decr) {
        (true, _) => Monotonicity::Increasing,
        (_, true) => Monotonicity::Decreasing,
        _ => Monotonicity::Neither,
    };

    // F(s)/s strictly increasing over the top quarter of the grid
    let tail = &grid[grid.len() * 3 / 4..];
    let ratios: Vec<f64> = tail.iter().map(|&s| f(s) / s).collect();
    let superlinear = ratios.windows(2).all(|w| w[1] > w[0]) && ratios[ratios.len() - 1] > ratios[0] + 1.0;

    // F(z+w) <= C (1 + F(z) + F(w))
    let coarse = math::logspace(-6.0, libm::log10(s_max / 2.0), 60);
    let mut c_dbl: f64 = 0.0;
    for &z in &coarse {
        for &w in &coarse {
            let denom = 1.0 + f(z) + f(w);
            let num = f(z + w);
            if denom <= 0.0 {
                if num > 0.0 {
                    c_dbl = f64::INFINITY;
                }
                continue;
            }
            c_dbl = c_dbl.max(num / denom);
        }
    }
    let doubling_ok = c_dbl.is_finite() && c_dbl < 1e6;

    let vanishes_at_zero = f(0.0).abs() <= 1e-12;

    let alpha = 1.0 / 3.0 + 0.05;
    let small = math::logspace(-12.0, -3.0, 100);
    let lower_growth_ok = small.iter().map(|&s| f(s) / libm::pow(s, alpha)).fold(f64::INFINITY, f64::min) > -1e3;

    let mut violations = Vec::new();
    let mut need = |ok: bool, name: &str| {
        if !ok {
            violations.push(String::from(name));
        }
    };
    need(convex, "convexity of F");
    need(dual_convex, "convexity of s F(1/s)");
    need(superlinear, "superlinear growth");
    need(doubling_ok, &format!("doubling condition (C = {c_dbl})"));
    need(vanishes_at_zero, "F(0) = 0");
    need(lower_growth_ok, "lower growth bound near 0");
    Ok(McCannReport {
        pass: violations.is_empty(),
        violations,
        convex,
        dual_convex,
        dual_monotonicity,
        superlinear,
        doubling_constant: c_dbl,
        vanishes_at_zero,
        lower_growth_ok,
    })
}

/// Secant slopes nondecreasing, up to rounding.
fn convex_on(x: &[f64], y: &[f64]) -> bool {
    let slopes: Vec<f64> = (0..x.len() - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    slopes.windows(2).enumerate().all(|(i, w)| {
        let scale = (y[i].abs() + y[i + 1].abs() + y[i + 2].abs()) / (x[i + 2] - x[i]);
        w[1] >= w[0] - 1e-9 * scale.max(1e-300)
    })
}
