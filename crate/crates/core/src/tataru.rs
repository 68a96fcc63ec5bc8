//! The kappa-adjusted Tataru distance
//! `d_T(pi, rho) = inf_{t >= 0} t + e^{kh t} d(pi, rho(t))`, `kh = min(0, kappa)`.

use alloc::vec::Vec;

use crate::error::{usage, Result};
use crate::flow::{flow_mms, flow_point, FlowConfig};
use crate::math;
use crate::point::StatePoint;
use crate::space::Space;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TataruResult {
    pub value: f64,
    pub t_star: f64,
    pub flow_samples_used: usize,
}

enum FlowSource {
    Exact,
    /// Chart samples at `k * flow_dt`, linearly interpolated.
    Sampled,
}

/// Precomputed flow of the second argument, reusable across many first arguments.
pub struct TataruKernel<'a> {
    space: &'a dyn Space,
    rho: StatePoint,
    kappa_hat: f64,
    flow_dt: f64,
    horizon: f64,
    source: FlowSource,
    /// `rho(k * flow_dt)` in chart coordinates.
    charts: Vec<Vec<f64>>,
}

impl<'a> TataruKernel<'a> {
    /// Flows `rho` up to `horizon`; `value` then accepts any first argument whose
    /// search bracket fits inside the horizon.
    pub fn new(space: &'a dyn Space, rho: &StatePoint, flow_dt: f64, horizon: f64) -> Result<Self> {
        if !(flow_dt > 0.0) {
            return Err(usage("flow_dt must be positive"));
        }
        space.validate(rho)?;
        let horizon = horizon.max(flow_dt);
        let n = libm::ceil(horizon / flow_dt) as usize + 1;
        let exact = space.exact_flow(rho, flow_dt).is_some();
        let charts = if exact {
            (0..=n).map(|k| space.to_chart(&space.exact_flow(rho, k as f64 * flow_dt).unwrap())).collect()
        } else {
            let traj = flow_mms(space, rho, &FlowConfig::new(flow_dt, n as f64 * flow_dt))?;
            traj.states.iter().map(|s| space.to_chart(s)).collect()
        };
        Ok(TataruKernel {
            space,
            rho: rho.clone(),
            kappa_hat: space.kappa().min(0.0),
            flow_dt,
            horizon: n as f64 * flow_dt,
            source: if exact { FlowSource::Exact } else { FlowSource::Sampled },
            charts,
        })
    }

    pub fn rho(&self) -> &StatePoint {
        &self.rho
    }

    fn chart_at(&self, t: f64) -> Vec<f64> {
        match self.source {
            FlowSource::Exact => self.space.to_chart(&self.space.exact_flow(&self.rho, t).unwrap()),
            FlowSource::Sampled => {
                let s = t / self.flow_dt;
                let k = (libm::floor(s) as usize).min(self.charts.len() - 2);
                math::lerp(&self.charts[k], &self.charts[k + 1], s - k as f64)
            }
        }
    }

    pub fn value(&self, pi: &StatePoint) -> Result<TataruResult> {
        self.value_with_bracket(pi, 1.0)
    }

    /// Minimizes over `[0, factor * d(pi, rho)]`; `factor = 1` is the standard bracket.
    pub fn value_with_bracket(&self, pi: &StatePoint, factor: f64) -> Result<TataruResult> {
        self.space.validate(pi)?;
        let y = self.space.to_chart(pi);
        self.value_chart(&y, factor)
    }

    /// Same as [`value`](Self::value) for a point given in chart coordinates.
    pub fn value_chart(&self, y: &[f64], factor: f64) -> Result<TataruResult> {
        let d0 = math::dist(y, &self.charts[0]);
        if d0 == 0.0 {
            return Ok(TataruResult { value: 0.0, t_star: 0.0, flow_samples_used: 1 });
        }
        let t_max = factor * d0;
        if t_max > self.horizon + 1e-12 {
            return Err(usage("Tataru bracket exceeds the precomputed flow horizon"));
        }
        let kh = self.kappa_hat;
        let phi_k = |k: usize| k as f64 * self.flow_dt + libm::exp(kh * k as f64 * self.flow_dt) * math::dist(y, &self.charts[k]);
        let phi = |t: f64| t + libm::exp(kh * t) * math::dist(y, &self.chart_at(t));

        let k_max = libm::floor(t_max / self.flow_dt) as usize;
        let scan: Vec<f64> = (0..=k_max).map(phi_k).collect();
        let mut samples = scan.len();
        let mut best = (0.0, d0);
        // refine around every local minimum of the coarse scan
        for k in 0..scan.len() {
            let left_ok = k == 0 || scan[k] <= scan[k - 1];
            let right_ok = k + 1 == scan.len() || scan[k] <= scan[k + 1];
            if !(left_ok && right_ok) {
                continue;
            }
            let a = if k == 0 { 0.0 } else { (k - 1) as f64 * self.flow_dt };
            let b = ((k + 1) as f64 * self.flow_dt).min(t_max);
            if scan[k] < best.1 {
                best = (k as f64 * self.flow_dt, scan[k]);
            }
            if b > a {
                let (t, v, evals) = math::golden_section(phi, a, b, 1e-12 * (1.0 + b));
                samples += evals;
                if v < best.1 {
                    best = (t, v);
                }
            }
        }
        let v_end = phi(t_max);
        samples += 1;
        if v_end < best.1 {
            best = (t_max, v_end);
        }
        Ok(TataruResult { value: best.1, t_star: best.0, flow_samples_used: samples })
    }
}

pub fn tataru_distance(space: &dyn Space, pi: &StatePoint, rho: &StatePoint, flow_dt: f64) -> Result<TataruResult> {
    let d = space.distance(pi, rho)?;
    TataruKernel::new(space, rho, flow_dt, d)?.value(pi)
}

/// Max over samples `(mu, nu, mu^, nu^)` of
/// `d_T(mu,nu) - d_T(mu^,nu^) - d(mu,mu^) - d(nu,nu^)`.
pub fn verify_tataru_lipschitz(space: &dyn Space, samples: &[[StatePoint; 4]], flow_dt: f64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for [mu, nu, mu_h, nu_h] in samples {
        let a = tataru_distance(space, mu, nu, flow_dt)?.value;
        let b = tataru_distance(space, mu_h, nu_h, flow_dt)?.value;
        worst = worst.max(a - b - space.distance(mu, mu_h)? - space.distance(nu, nu_h)?);
    }
    Ok(worst)
}

/// Max over samples `(nu, nu^)` and `r` of `(d_T(nu(r), nu^) - d_T(nu, nu^)) / r - 1`.
pub fn verify_tataru_flow_lipschitz(space: &dyn Space, samples: &[(StatePoint, StatePoint)], r_values: &[f64], flow_dt: f64) -> Result<f64> {
    if r_values.iter().any(|&r| !(r > 0.0)) {
        return Err(usage("r values must be positive"));
    }
    let mut worst = f64::NEG_INFINITY;
    for (nu, nu_h) in samples {
        let moved: Vec<StatePoint> = r_values.iter().map(|&r| flow_point(space, nu, r, flow_dt)).collect::<Result<_>>()?;
        let mut horizon = space.distance(nu, nu_h)?;
        for m in &moved {
            horizon = horizon.max(space.distance(m, nu_h)?);
        }
        let kernel = TataruKernel::new(space, nu_h, flow_dt, horizon + flow_dt)?;
        let base = kernel.value(nu)?.value;
        for (&r, m) in r_values.iter().zip(&moved) {
            let v = kernel.value(m)?.value;
            worst = worst.max((v - base) / r - 1.0);
        }
    }
    Ok(worst)
}

/// Max over `(rho, mu, nu)` of `d_T(rho,nu) - d_T(rho,mu) - d_T(mu,nu)`.
pub fn verify_tataru_triangle(space: &dyn Space, samples: &[[StatePoint; 3]], flow_dt: f64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for [rho, mu, nu] in samples {
        let a = tataru_distance(space, rho, nu, flow_dt)?.value;
        let b = tataru_distance(space, rho, mu, flow_dt)?.value;
        let c = tataru_distance(space, mu, nu, flow_dt)?.value;
        worst = worst.max(a - b - c);
    }
    Ok(worst)
}
