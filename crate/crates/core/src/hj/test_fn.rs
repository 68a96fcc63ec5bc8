use alloc::format;
use alloc::vec::Vec;

use crate::error::{usage, Result};
use crate::ext::ExtReal;
use crate::point::StatePoint;
use crate::space::Space;
use crate::tataru::TataruKernel;

/// `f(pi) = a/2 d^2(pi, rho) + b d_T(pi, mu) + c`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UpperTestFunction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub mu: StatePoint,
    pub rho: StatePoint,
}

/// `f(mu) = -a/2 d^2(gamma, mu) - b d_T(mu, pi) + c`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LowerTestFunction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub pi: StatePoint,
    pub gamma: StatePoint,
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(usage(format!("test function needs a > 0 (got {a})")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(usage(format!("test function needs b > 0 (got {b})")));
    }
    Ok(())
}

impl UpperTestFunction {
    pub fn new(space: &dyn Space, a: f64, b: f64, c: f64, mu: StatePoint, rho: StatePoint) -> Result<Self> {
        check_ab(a, b)?;
        space.validate(&mu)?;
        if !space.energy(&rho).is_finite() {
            return Err(usage("upper test function needs E(rho) < inf"));
        }
        Ok(UpperTestFunction { a, b, c, mu, rho })
    }
}

impl LowerTestFunction {
    pub fn new(space: &dyn Space, a: f64, b: f64, c: f64, pi: StatePoint, gamma: StatePoint) -> Result<Self> {
        check_ab(a, b)?;
        space.validate(&pi)?;
        if !space.energy(&gamma).is_finite() {
            return Err(usage("lower test function needs E(gamma) < inf"));
        }
        Ok(LowerTestFunction { a, b, c, pi, gamma })
    }
}

/// `a[E(rho) - E(pi)] - a k/2 d^2 + b + a^2/2 d^2 + a b d + b^2/2` with `d = d(pi, rho)`.
pub fn upper_g(a: f64, b: f64, kappa: f64, e_rho: f64, e_pi: ExtReal, d: f64) -> ExtReal {
    let rest = -0.5 * a * kappa * d * d + b + 0.5 * a * a * d * d + a * b * d + 0.5 * b * b;
    (-e_pi + e_rho) * a + rest
}

/// `a[E(mu) - E(gamma)] + a k/2 d^2 - b + a^2/2 d^2 - a b d - b^2/2` with `d = d(gamma, mu)`.
pub fn lower_g(a: f64, b: f64, kappa: f64, e_gamma: f64, e_mu: ExtReal, d: f64) -> ExtReal {
    let rest = 0.5 * a * kappa * d * d - b + 0.5 * a * a * d * d - a * b * d - 0.5 * b * b;
    (e_mu - e_gamma) * a + rest
}

/// Evaluates an upper test function at many points, flowing `mu` once.
pub struct UpperEvaluator<'a> {
    space: &'a dyn Space,
    tf: UpperTestFunction,
    e_rho: f64,
    kernel: TataruKernel<'a>,
}

impl<'a> UpperEvaluator<'a> {
    /// `horizon` must cover `d(pi, mu)` for every point that will be evaluated.
    pub fn new(space: &'a dyn Space, tf: &UpperTestFunction, flow_dt: f64, horizon: f64) -> Result<Self> {
        let e_rho = space.energy(&tf.rho).finite().ok_or_else(|| usage("E(rho) must be finite"))?;
        let kernel = TataruKernel::new(space, &tf.mu, flow_dt, horizon)?;
        Ok(UpperEvaluator { space, tf: tf.clone(), e_rho, kernel })
    }

    /// `(f(pi), g(pi))`.
    pub fn eval(&self, pi: &StatePoint) -> Result<(f64, ExtReal)> {
        let tf = &self.tf;
        let d = self.space.distance(pi, &tf.rho)?;
        let dt = self.kernel.value(pi)?.value;
        let f = 0.5 * tf.a * d * d + tf.b * dt + tf.c;
        let g = upper_g(tf.a, tf.b, self.space.kappa(), self.e_rho, self.space.energy(pi), d);
        Ok((f, g))
    }
}

pub struct LowerEvaluator<'a> {
    space: &'a dyn Space,
    tf: LowerTestFunction,
    e_gamma: f64,
    kernel: TataruKernel<'a>,
}

impl<'a> LowerEvaluator<'a> {
    /// `horizon` must cover `d(mu, pi)` for every point that will be evaluated.
    pub fn new(space: &'a dyn Space, tf: &LowerTestFunction, flow_dt: f64, horizon: f64) -> Result<Self> {
        let e_gamma = space.energy(&tf.gamma).finite().ok_or_else(|| usage("E(gamma) must be finite"))?;
        let kernel = TataruKernel::new(space, &tf.pi, flow_dt, horizon)?;
        Ok(LowerEvaluator { space, tf: tf.clone(), e_gamma, kernel })
    }

    /// `(f(mu), g(mu))`.
    pub fn eval(&self, mu: &StatePoint) -> Result<(f64, ExtReal)> {
        let tf = &self.tf;
        let d = self.space.distance(&tf.gamma, mu)?;
        let dt = self.kernel.value(mu)?.value;
        let f = -0.5 * tf.a * d * d - tf.b * dt + tf.c;
        let g = lower_g(tf.a, tf.b, self.space.kappa(), self.e_gamma, self.space.energy(mu), d);
        Ok((f, g))
    }
}

pub fn eval_upper(space: &dyn Space, tf: &UpperTestFunction, pi: &StatePoint, flow_dt: f64) -> Result<(f64, ExtReal)> {
    let horizon = space.distance(pi, &tf.mu)?;
    UpperEvaluator::new(space, tf, flow_dt, horizon)?.eval(pi)
}

pub fn eval_lower(space: &dyn Space, tf: &LowerTestFunction, mu: &StatePoint, flow_dt: f64) -> Result<(f64, ExtReal)> {
    let horizon = space.distance(mu, &tf.pi)?;
    LowerEvaluator::new(space, tf, flow_dt, horizon)?.eval(mu)
}

/// Largest pairwise distance from `anchor` to any grid point (a safe Tataru horizon).
pub fn horizon_for(space: &dyn Space, grid: &[StatePoint], anchor: &StatePoint) -> Result<f64> {
    let ds: Vec<f64> = grid.iter().map(|p| space.distance(p, anchor)).collect::<Result<_>>()?;
    Ok(ds.into_iter().fold(0.0, f64::max))
}
