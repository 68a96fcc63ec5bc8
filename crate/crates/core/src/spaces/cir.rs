use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{construction, domain, Result};
use crate::ext::ExtReal;
use crate::point::StatePoint;
use crate::space::Space;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CirDescriptor {
    pub mu: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl CirDescriptor {
    /// Defaults: `x_lo = 1e-4`, `x_hi = 50 mu`.
    pub fn new(mu: f64) -> Self {
        CirDescriptor { mu, x_lo: 1e-4, x_hi: 50.0 * mu }
    }
}

/// Half-line with metric `g(x) = 1/x` and energy
/// `E(x) = -mu log x + x - (mu - mu log mu)`.
///
/// Chart `y = 2 sqrt(x)` is an isometry onto `[0, inf)`; there the energy is
/// `-2 mu log y + y^2/4 + const`, whose second derivative is bounded below by
/// 1/2, which is the modulus declared here.
#[derive(Clone, Debug)]
pub struct CirSpace {
    desc: CirDescriptor,
}

pub fn make_cir(desc: CirDescriptor) -> Result<CirSpace> {
    let CirDescriptor { mu, x_lo, x_hi } = desc;
    if !(mu.is_finite() && x_lo.is_finite() && x_hi.is_finite()) {
        return Err(construction("CIR parameters must be finite"));
    }
    if !(0.0 < x_lo && x_lo < mu && mu < x_hi) {
        return Err(construction(format!("CIR requires 0 < x_lo < mu < x_hi (got {x_lo}, {mu}, {x_hi})")));
    }
    Ok(CirSpace { desc })
}

impl CirSpace {
    pub fn descriptor(&self) -> &CirDescriptor {
        &self.desc
    }

    pub fn mu(&self) -> f64 {
        self.desc.mu
    }

    pub fn energy_x(&self, x: f64) -> ExtReal {
        if x <= 0.0 {
            return ExtReal::PosInf;
        }
        let mu = self.desc.mu;
        ExtReal::Finite(-mu * libm::log(x) + x - (mu - mu * libm::log(mu)))
    }

    /// Riemannian gradient `x E'(x) = x - mu`.
    pub fn grad_energy_x(&self, x: f64) -> f64 {
        x - self.desc.mu
    }

    /// `<-grad E(x), grad_x d^2/2> - <-grad E(y), -grad_y d^2/2>` in chart form.
    pub fn convexity_pairing(&self, x: f64, y: f64) -> f64 {
        let (yx, yy) = (2.0 * libm::sqrt(x), 2.0 * libm::sqrt(y));
        -(self.chart_slope(yx) - self.chart_slope(yy)) * (yx - yy)
    }

    fn chart_slope(&self, y: f64) -> f64 {
        -2.0 * self.desc.mu / y + 0.5 * y
    }
}

impl Space for CirSpace {
    fn id(&self) -> &'static str {
        "cir"
    }

    fn dimension(&self) -> usize {
        1
    }

    fn kappa(&self) -> f64 {
        0.5
    }

    fn check_domain(&self, p: &StatePoint) -> Result<()> {
        if p.x() < 0.0 {
            return Err(domain(format!("CIR coordinate {} is negative", p.x())));
        }
        Ok(())
    }

    fn to_chart(&self, p: &StatePoint) -> Vec<f64> {
        vec![2.0 * libm::sqrt(p.x().max(0.0))]
    }

    fn from_chart(&self, y: &[f64]) -> StatePoint {
        StatePoint::scalar(0.25 * y[0] * y[0])
    }

    fn project_chart(&self, y: &mut [f64]) {
        let lo = 2.0 * libm::sqrt(self.desc.x_lo);
        let hi = 2.0 * libm::sqrt(self.desc.x_hi);
        y[0] = y[0].clamp(lo, hi);
    }

    fn chart_energy(&self, y: &[f64]) -> ExtReal {
        if y[0] <= 0.0 {
            return ExtReal::PosInf;
        }
        self.energy_x(0.25 * y[0] * y[0])
    }

    fn chart_gradient(&self, y: &[f64]) -> Option<Vec<f64>> {
        if y[0] <= 0.0 {
            return None;
        }
        Some(vec![self.chart_slope(y[0])])
    }

    fn exact_flow(&self, p: &StatePoint, t: f64) -> Option<StatePoint> {
        let mu = self.desc.mu;
        Some(StatePoint::scalar(mu + (p.x() - mu) * libm::exp(-t)))
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> StatePoint {
        let lo = (0.05 * self.desc.mu).max(self.desc.x_lo);
        let hi = (6.0 * self.desc.mu).min(self.desc.x_hi);
        StatePoint::scalar(rng.gen_range(lo..hi))
    }
}
