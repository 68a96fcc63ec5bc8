use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{construction, domain, Result};
use crate::ext::ExtReal;
use crate::math;
use crate::point::StatePoint;
use crate::space::{Space, Tolerances};
use crate::spaces::mccann::mccann_check;
use crate::spaces::potential::{Integrand, Potential};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wasserstein1DDescriptor {
    pub m: usize,
    pub internal: Integrand,
    pub potential: Potential,
    pub interaction: Potential,
}

/// Probability measures on the line in quantile coordinates `Q_i = Q((i-1/2)/m)`.
///
/// `W2^2 = sum (Q_i - Q~_i)^2 / m`, so the chart `y = Q / sqrt(m)` is an
/// isometry onto the cone of nondecreasing vectors. Energy:
///
/// ```text
/// E(Q) = (1/m) sum_{j<m} g(m dQ_j) + (1/m) sum V(Q_i) + (1/2m^2) sum_{j,k} W(Q_j - Q_k)
/// ```
///
/// with `g(q) = q F(1/q)` and forward gaps `dQ_j = Q_{j+1} - Q_j`.
#[derive(Clone, Debug)]
pub struct Wasserstein1DSpace {
    desc: Wasserstein1DDescriptor,
    /// Standard normal quantiles at the levels.
    z: Vec<f64>,
}

/// Reciprocal-density threshold below which a cell counts as collapsed.
const MIN_GAP_DENSITY: f64 = 1e-12;

pub fn make_wasserstein1d(desc: Wasserstein1DDescriptor) -> Result<Wasserstein1DSpace> {
    if desc.m < 2 {
        return Err(construction("Wasserstein-1D needs m >= 2 quantile levels"));
    }
    let f = desc.internal;
    // no internal energy at all is admissible; any nonzero integrand must satisfy McCann's condition
    if f != Integrand::Zero {
        let report = mccann_check(&|s| f.value(s), 1e6)?;
        if !report.pass {
            return Err(construction(format!("integrand {} fails McCann's condition: {}", f.name(), report.violations.join("; "))));
        }
    }
    let kv = desc.potential.convexity_modulus();
    if !kv.is_finite() || !desc.potential.sampled_convexity_ok(kv, 10.0) {
        return Err(construction(format!("potential V = {} is not kappa_V-convex", desc.potential.name())));
    }
    let kw = desc.interaction.convexity_modulus();
    if !(kw >= 0.0) || !desc.interaction.sampled_convexity_ok(kw, 10.0) {
        return Err(construction(format!("interaction W = {} must be kappa_W-convex with kappa_W >= 0", desc.interaction.name())));
    }
    let m = desc.m;
    let z = (1..=m).map(|i| math::normal_quantile((i as f64 - 0.5) / m as f64)).collect();
    Ok(Wasserstein1DSpace { desc, z })
}

impl Wasserstein1DSpace {
    pub fn descriptor(&self) -> &Wasserstein1DDescriptor {
        &self.desc
    }

    pub fn levels(&self) -> usize {
        self.desc.m
    }

    /// Quantiles of `N(mean, sigma^2)` at the levels.
    pub fn gaussian(&self, mean: f64, sigma: f64) -> StatePoint {
        StatePoint::from_vec(self.z.iter().map(|z| mean + sigma * z).collect())
    }

    pub fn energy_q(&self, q: &[f64]) -> ExtReal {
        let m = self.desc.m as f64;
        let f = &self.desc.internal;
        let mut internal = 0.0;
        if *f != Integrand::Zero {
            for w in q.windows(2) {
                let gap = m * (w[1] - w[0]);
                if gap <= 0.0 || 1.0 / gap < MIN_GAP_DENSITY {
                    if f.is_superlinear() || gap < 0.0 {
                        return ExtReal::PosInf;
                    }
                    continue;
                }
                internal += f.quantile_value(gap);
            }
            internal /= m;
        }
        let pot: f64 = q.iter().map(|&x| self.desc.potential.value(x)).sum::<f64>() / m;
        let mut inter = 0.0;
        if !self.desc.interaction.is_zero() {
            for (j, &a) in q.iter().enumerate() {
                for &b in &q[j + 1..] {
                    inter += self.desc.interaction.value(a - b);
                }
            }
            inter /= m * m;
        }
        ExtReal::from_f64(internal + pot + inter)
    }

    /// `dE/dQ_i`; `None` when a cell is collapsed under a superlinear integrand.
    pub fn energy_grad_q(&self, q: &[f64]) -> Option<Vec<f64>> {
        let n = q.len();
        let m = n as f64;
        let f = &self.desc.internal;
        let mut g = alloc::vec![0.0; n];
        if *f != Integrand::Zero {
            for j in 0..n - 1 {
                let gap = m * (q[j + 1] - q[j]);
                if gap <= 0.0 {
                    if f.is_superlinear() {
                        return None;
                    }
                    continue;
                }
                let d = f.quantile_deriv(gap);
                g[j + 1] += d;
                g[j] -= d;
            }
        }
        for (gi, &x) in g.iter_mut().zip(q) {
            *gi += self.desc.potential.deriv(x) / m;
        }
        if !self.desc.interaction.is_zero() {
            for i in 0..n {
                let s: f64 = q.iter().map(|&b| self.desc.interaction.deriv(q[i] - b)).sum();
                g[i] += s / (m * m);
            }
        }
        Some(g)
    }

    /// Discrete velocity `w_i = m dE/dQ_i`, the Wasserstein gradient at atom i.
    pub fn velocity(&self, q: &StatePoint) -> Option<Vec<f64>> {
        let m = self.desc.m as f64;
        self.energy_grad_q(q.coords()).map(|g| g.into_iter().map(|v| m * v).collect())
    }

    /// Fits `Q = a + s z` and returns `(a, s)` when the vector is Gaussian.
    pub fn gaussian_params(&self, q: &[f64]) -> Option<(f64, f64)> {
        let m = q.len() as f64;
        let a = q.iter().sum::<f64>() / m;
        let s = q.iter().zip(&self.z).map(|(x, z)| (x - a) * z).sum::<f64>() / self.z.iter().map(|z| z * z).sum::<f64>();
        let tol = 1e-9 * (1.0 + a.abs() + s.abs());
        let fits = q.iter().zip(&self.z).all(|(x, z)| (x - a - s * z).abs() <= tol);
        (fits && s > 0.0).then_some((a, s))
    }
}

/// Fisher-type information `(1/m) sum w_i^2`. Non-monotone input is a domain
/// error; ties give `+inf` under a superlinear integrand.
pub fn wasserstein_information(space: &Wasserstein1DSpace, q: &StatePoint) -> Result<ExtReal> {
    space.validate(q)?;
    Ok(space.information(q))
}

impl Space for Wasserstein1DSpace {
    fn id(&self) -> &'static str {
        "wasserstein1d"
    }

    fn dimension(&self) -> usize {
        self.desc.m
    }

    /// Only the potential contributes: the interaction term is invariant under
    /// translations, so it adds nothing along those geodesics.
    fn kappa(&self) -> f64 {
        self.desc.potential.convexity_modulus()
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances { metric: 1e-6, geodesic: 1e-6, convexity: 1e-8 }
    }

    fn check_domain(&self, p: &StatePoint) -> Result<()> {
        if let Some(i) = p.coords().windows(2).position(|w| w[1] < w[0]) {
            return Err(domain(format!("quantile vector decreases at level {i}")));
        }
        Ok(())
    }

    fn to_chart(&self, p: &StatePoint) -> Vec<f64> {
        let s = libm::sqrt(self.desc.m as f64);
        p.coords().iter().map(|q| q / s).collect()
    }

    fn from_chart(&self, y: &[f64]) -> StatePoint {
        let s = libm::sqrt(self.desc.m as f64);
        StatePoint::from_vec(y.iter().map(|v| v * s).collect())
    }

    fn project_chart(&self, y: &mut [f64]) {
        math::project_monotone(y);
    }

    fn chart_energy(&self, y: &[f64]) -> ExtReal {
        let q = self.from_chart(y);
        if q.coords().windows(2).any(|w| w[1] < w[0]) {
            return ExtReal::PosInf;
        }
        self.energy_q(q.coords())
    }

    fn chart_gradient(&self, y: &[f64]) -> Option<Vec<f64>> {
        let s = libm::sqrt(self.desc.m as f64);
        let q = self.from_chart(y);
        self.energy_grad_q(q.coords()).map(|g| g.into_iter().map(|v| v * s).collect())
    }

    /// Registered closed forms: entropy with `V = 0` (heat flow,
    /// `sigma^2 = sigma0^2 + 2t`) or `V = k x^2/2` (Fokker-Planck), `W = 0`, from
    /// Gaussian data.
    fn exact_flow(&self, p: &StatePoint, t: f64) -> Option<StatePoint> {
        if self.desc.internal != Integrand::Entropy || !self.desc.interaction.is_zero() {
            return None;
        }
        let (a, s) = self.gaussian_params(p.coords())?;
        let (a_t, s_t) = match self.desc.potential {
            Potential::Zero => (a, libm::sqrt(s * s + 2.0 * t)),
            Potential::Quadratic { k } if k != 0.0 => {
                let e = libm::exp(-k * t);
                let var = 1.0 / k + (s * s - 1.0 / k) * e * e;
                if var <= 0.0 {
                    return None;
                }
                (a * e, libm::sqrt(var))
            }
            _ => return None,
        };
        Some(self.gaussian(a_t, s_t))
    }

    /// Gaussian quantiles with a smooth monotone tanh distortion.
    fn sample_point(&self, rng: &mut dyn RngCore) -> StatePoint {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let s: f64 = rng.gen_range(0.5..2.0);
        let beta: f64 = rng.gen_range(0.0..0.5);
        StatePoint::from_vec(self.z.iter().map(|z| a + s * z + beta * libm::tanh(*z)).collect())
    }
}
