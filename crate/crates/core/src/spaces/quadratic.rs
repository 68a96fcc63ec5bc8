use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{construction, Result};
use crate::ext::ExtReal;
use crate::point::StatePoint;
use crate::space::Space;
use crate::spaces::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticDescriptor {
    pub dimension: usize,
    pub kappa: f64,
    /// Convex perturbation applied to each coordinate.
    pub perturbation: Potential,
}

impl QuadraticDescriptor {
    /// One-dimensional Ornstein-Uhlenbeck energy `kappa x^2 / 2`.
    pub fn ou(kappa: f64) -> Self {
        QuadraticDescriptor { dimension: 1, kappa, perturbation: Potential::Zero }
    }
}

/// Euclidean space with `E(x) = kappa |x|^2 / 2 + sum F(x_i)`.
#[derive(Clone, Debug)]
pub struct QuadraticSpace {
    desc: QuadraticDescriptor,
}

pub fn make_quadratic(desc: QuadraticDescriptor) -> Result<QuadraticSpace> {
    if desc.dimension == 0 {
        return Err(construction("quadratic space needs dimension >= 1"));
    }
    if !desc.kappa.is_finite() {
        return Err(construction("kappa must be finite"));
    }
    if desc.perturbation.convexity_modulus() < 0.0 || !desc.perturbation.sampled_convexity_ok(0.0, 10.0) {
        return Err(construction(format!("perturbation F = {} is not convex", desc.perturbation.name())));
    }
    Ok(QuadraticSpace { desc })
}

impl QuadraticSpace {
    pub fn descriptor(&self) -> &QuadraticDescriptor {
        &self.desc
    }

    /// Gradient-flow drift `-(kappa x + F'(x))` of a single coordinate.
    pub fn drift_1d(&self, x: f64) -> f64 {
        -(self.desc.kappa * x + self.desc.perturbation.deriv(x))
    }
}

impl Space for QuadraticSpace {
    fn id(&self) -> &'static str {
        if self.desc.dimension == 1 && self.desc.perturbation.is_zero() {
            "ou"
        } else {
            "quadratic"
        }
    }

    fn dimension(&self) -> usize {
        self.desc.dimension
    }

    fn kappa(&self) -> f64 {
        self.desc.kappa
    }

    fn check_domain(&self, _p: &StatePoint) -> Result<()> {
        Ok(())
    }

    fn to_chart(&self, p: &StatePoint) -> Vec<f64> {
        p.coords().to_vec()
    }

    fn from_chart(&self, y: &[f64]) -> StatePoint {
        StatePoint::from_vec(y.to_vec())
    }

    fn project_chart(&self, _y: &mut [f64]) {}

    fn chart_energy(&self, y: &[f64]) -> ExtReal {
        let f = &self.desc.perturbation;
        let e: f64 = y.iter().map(|&x| 0.5 * self.desc.kappa * x * x + f.value(x)).sum();
        ExtReal::from_f64(e)
    }

    fn chart_gradient(&self, y: &[f64]) -> Option<Vec<f64>> {
        Some(y.iter().map(|&x| -self.drift_1d(x)).collect())
    }

    fn exact_flow(&self, p: &StatePoint, t: f64) -> Option<StatePoint> {
        if !self.desc.perturbation.is_zero() {
            return None;
        }
        let decay = libm::exp(-self.desc.kappa * t);
        let c: Vec<f64> = p.coords().iter().map(|x| x * decay).collect();
        if c.iter().all(|v| v.is_finite()) {
            Some(StatePoint::from_vec(c))
        } else {
            None
        }
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> StatePoint {
        StatePoint::from_vec((0..self.desc.dimension).map(|_| rng.gen_range(-3.0..3.0)).collect())
    }
}
