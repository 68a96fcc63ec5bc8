//! The drift and distance estimates at a quadruplication optimum, with the
//! vanishing terms reported as residuals.

use crate::ekeland::quadruple::QuadrupleState;
use crate::error::{usage, Result};
use crate::space::Space;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KeyEstimateReport {
    pub key1_lhs: f64,
    pub key1_rhs: f64,
    /// `|key1_lhs - key1_rhs|`: how far the two sides are from meeting.
    pub key1_residual: f64,
    pub key2_lhs: f64,
    pub key2_rhs: f64,
    pub key2_residual: f64,
}

/// Evaluates both sides of the two estimates at `q`; the vanishing terms are
/// reported as the two-sided gaps. The drift estimate is
/// taken literally, including the `d^2(pi, rho)` in its second kappa term.
pub fn verify_key_estimates(space: &dyn Space, q: &QuadrupleState) -> Result<KeyEstimateReport> {
    let e = |p| space.energy(p).finite().ok_or_else(|| usage("key estimates need finite energies at the quadruple"));
    let (e_pi, e_rho, e_mu, e_gamma) = (e(&q.pi)?, e(&q.rho)?, e(&q.mu)?, e(&q.gamma)?);
    let i_rho = space.information(&q.rho).finite().ok_or_else(|| usage("I(rho) must be finite"))?;
    let i_gamma = space.information(&q.gamma).finite().ok_or_else(|| usage("I(gamma) must be finite"))?;
    let (alpha, eps, kappa) = (q.alpha, q.eps_alpha, space.kappa());
    let (wp, wm) = (1.0 / (1.0 - eps), 1.0 / (1.0 + eps));
    let d_pr = space.distance(&q.pi, &q.rho)?;
    let d_mg = space.distance(&q.mu, &q.gamma)?;
    let d2_pr = d_pr * d_pr;

    let key1_lhs = alpha * (wp * (e_rho - e_pi + 0.5 * kappa * d2_pr) - wm * (e_mu - e_gamma - 0.5 * kappa * d2_pr));
    let info = eps * wp * i_rho + eps * wm * i_gamma;
    let key1_rhs = -info;
    let key2_lhs = 0.5 * alpha * alpha * (wp * d2_pr - wm * d_mg * d_mg);
    let key2_rhs = info;
    Ok(KeyEstimateReport {
        key1_lhs,
        key1_rhs,
        key1_residual: (key1_lhs - key1_rhs).abs(),
        key2_lhs,
        key2_rhs,
        key2_residual: (key2_lhs - key2_rhs).abs(),
    })
}

/// Each residual is at most the previous one divided by `ratio`, or already below 1e-12.
pub fn residuals_shrink(residuals: &[f64], ratio: f64) -> bool {
    residuals.windows(2).all(|w| w[1] <= w[0] / ratio || w[1] <= 1e-12)
}
