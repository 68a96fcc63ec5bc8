//! Checks that the explicit Hamiltonians bound the formal one,
//! `H f <= H_dagger f` and `H_ddagger f <= H f`, on test functions whose
//! Tataru part carries the smallest weight `b0`.

use alloc::vec::Vec;

use crate::error::{usage, Result};
use crate::hj::test_fn::{lower_g, upper_g};
use crate::math;
use crate::point::StatePoint;
use crate::space::Space;

/// Weight of the Tataru term; the check adds the analytic slack it induces.
pub const SANDWICH_B0: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SandwichReport {
    /// Max of `H_exact - g_dagger - slack` (positive means violated).
    pub upper: f64,
    /// Max of `g_ddagger - slack - H_exact`.
    pub lower: f64,
    pub checks: usize,
}

impl SandwichReport {
    pub fn max_violation(&self) -> f64 {
        self.upper.max(self.lower).max(0.0)
    }
}

/// For every `a`, reference point `r` and sample `p` (all with finite energy):
/// `f = a/2 d^2(., r)` against `g_dagger(p)` with `rho = r`, and
/// `f = -a/2 d^2(r, .)` against `g_ddagger(p)` with `gamma = r`.
pub fn hamiltonian_sandwich_check(space: &dyn Space, a_values: &[f64], refs: &[StatePoint], samples: &[StatePoint]) -> Result<SandwichReport> {
    if a_values.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(usage("sandwich check needs a > 0"));
    }
    let b0 = SANDWICH_B0;
    let kappa = space.kappa();
    let mut rep = SandwichReport { upper: f64::NEG_INFINITY, lower: f64::NEG_INFINITY, checks: 0 };
    let grads: Vec<(Vec<f64>, Vec<f64>, crate::ExtReal)> = samples
        .iter()
        .filter_map(|p| {
            let y = space.to_chart(p);
            let e = space.energy(p);
            let g = space.chart_gradient(&y)?;
            e.is_finite().then_some((y, g, e))
        })
        .collect();
    for r in refs {
        let e_r = space.energy(r).finite().ok_or_else(|| usage("sandwich reference points need finite energy"))?;
        let yr = space.to_chart(r);
        for (y, grad_e, e_p) in &grads {
            let diff: Vec<f64> = y.iter().zip(&yr).map(|(a, b)| a - b).collect();
            let d = math::norm(&diff);
            let pairing = math::dot(&diff, grad_e);
            for &a in a_values {
                let slack = b0 + b0 * a * d + 0.5 * b0 * b0;
                // grad f = a (y - y_r) for the upper, -a (y - y_r) for the lower test function
                let h_up = -a * pairing + 0.5 * a * a * d * d;
                let h_low = a * pairing + 0.5 * a * a * d * d;
                let g_up = upper_g(a, b0, kappa, e_r, *e_p, d).to_f64();
                let g_low = lower_g(a, b0, kappa, e_r, *e_p, d).to_f64();
                rep.upper = rep.upper.max(h_up - g_up - slack);
                rep.lower = rep.lower.max(g_low - slack - h_low);
                rep.checks += 1;
            }
        }
    }
    Ok(rep)
}
