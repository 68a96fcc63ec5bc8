use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{construction, Result};
use crate::ext::ExtReal;
use crate::point::StatePoint;
use crate::space::Space;
use crate::spaces::potential::Potential;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AllenCahnDescriptor {
    pub n_grid: usize,
    pub length: f64,
    pub kappa: f64,
    pub potential: Potential,
}

/// Periodic grid fields with
/// `E(rho) = h sum [ ((rho_{i+1} - rho_i)/h)^2 / 2 + kappa rho_i^2 / 2 + F(rho_i) ]`
/// and the discrete L^2 metric `h sum (rho - sigma)^2`. Coordinates are the
/// nodal values; the chart scales them by `sqrt(h)`.
#[derive(Clone, Debug)]
pub struct AllenCahnSpace {
    desc: AllenCahnDescriptor,
    h: f64,
}

pub fn make_allen_cahn(desc: AllenCahnDescriptor) -> Result<AllenCahnSpace> {
    if desc.n_grid < 3 {
        return Err(construction("Allen-Cahn grid needs N >= 3"));
    }
    if !(desc.length > 0.0 && desc.length.is_finite()) {
        return Err(construction("domain length L must be positive"));
    }
    if !desc.kappa.is_finite() {
        return Err(construction("kappa must be finite"));
    }
    let f = desc.potential;
    if f.convexity_modulus() < 0.0 || !f.sampled_convexity_ok(0.0, 10.0) {
        return Err(construction(format!("F = {} is not convex", f.name())));
    }
    if f.value(0.0) != 0.0 {
        return Err(construction("F(0) = 0 is required"));
    }
    if (0..=200).any(|i| f.value(-10.0 + 0.1 * i as f64) < 0.0) {
        return Err(construction("F >= 0 is required"));
    }
    Ok(AllenCahnSpace { desc, h: desc.length / desc.n_grid as f64 })
}

impl AllenCahnSpace {
    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn descriptor(&self) -> &AllenCahnDescriptor {
        &self.desc
    }

    /// Periodic second-order Laplacian.
    pub fn laplacian(&self, rho: &[f64]) -> Vec<f64> {
        let n = rho.len();
        let h2 = self.h * self.h;
        (0..n).map(|i| (rho[(i + 1) % n] - 2.0 * rho[i] + rho[(i + n - 1) % n]) / h2).collect()
    }

    /// `Delta rho - F'(rho) - kappa rho`, the negative L^2 gradient.
    pub fn residual_field(&self, rho: &[f64]) -> Vec<f64> {
        let lap = self.laplacian(rho);
        rho.iter()
            .zip(lap)
            .map(|(&r, l)| l - self.desc.potential.deriv(r) - self.desc.kappa * r)
            .collect()
    }

    /// Eigenvalue of `-Delta` for Fourier mode `k`.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let s = libm::sin(core::f64::consts::PI * k as f64 / self.desc.n_grid as f64);
        4.0 * s * s / (self.h * self.h)
    }
}

/// `h sum (Delta rho - F'(rho) - kappa rho)^2`.
pub fn allen_cahn_information(space: &AllenCahnSpace, rho: &StatePoint) -> Result<f64> {
    space.validate(rho)?;
    Ok(space.h * space.residual_field(rho.coords()).iter().map(|v| v * v).sum::<f64>())
}

impl Space for AllenCahnSpace {
    fn id(&self) -> &'static str {
        "allen_cahn"
    }

    fn dimension(&self) -> usize {
        self.desc.n_grid
    }

    fn kappa(&self) -> f64 {
        self.desc.kappa
    }

    fn check_domain(&self, _p: &StatePoint) -> Result<()> {
        Ok(())
    }

    fn to_chart(&self, p: &StatePoint) -> Vec<f64> {
        let s = libm::sqrt(self.h);
        p.coords().iter().map(|r| r * s).collect()
    }

    fn from_chart(&self, y: &[f64]) -> StatePoint {
        let s = libm::sqrt(self.h);
        StatePoint::from_vec(y.iter().map(|v| v / s).collect())
    }

    fn project_chart(&self, _y: &mut [f64]) {}

    fn chart_energy(&self, y: &[f64]) -> ExtReal {
        let rho = self.from_chart(y);
        let r = rho.coords();
        let n = r.len();
        let h = self.h;
        let mut e = 0.0;
        for i in 0..n {
            let g = (r[(i + 1) % n] - r[i]) / h;
            e += 0.5 * g * g + 0.5 * self.desc.kappa * r[i] * r[i] + self.desc.potential.value(r[i]);
        }
        ExtReal::from_f64(h * e)
    }

    fn chart_gradient(&self, y: &[f64]) -> Option<Vec<f64>> {
        let rho = self.from_chart(y);
        let s = libm::sqrt(self.h);
        Some(self.residual_field(rho.coords()).into_iter().map(|v| -s * v).collect())
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> StatePoint {
        let n = self.desc.n_grid;
        let modes: Vec<(f64, f64, f64)> = (1..=3)
            .map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..core::f64::consts::TAU)))
            .collect();
        let offset: f64 = rng.gen_range(-0.5..0.5);
        StatePoint::from_vec(
            (0..n)
                .map(|i| {
                    let x = core::f64::consts::TAU * i as f64 / n as f64;
                    offset + modes.iter().map(|(k, a, ph)| a * libm::sin(k * x + ph)).sum::<f64>()
                })
                .collect(),
        )
    }
}
