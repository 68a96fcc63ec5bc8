//! The quadruplication construction on a finite grid: doubling variables
//! `(pi, rho, mu, gamma)`, distance and energy penalties, and Ekeland's
//! principle with the Tataru penalty.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::ekeland::key_estimates::{verify_key_estimates, KeyEstimateReport};
use crate::ekeland::principle::{ekeland_optimize, verify_ekeland, EkelandProblem, EkelandReport};
use crate::error::{usage, Error, Result};
use crate::flow::fit_quadratic_lower_bound;
use crate::hj::viscosity::GridFunction;
use crate::point::StatePoint;
use crate::space::Space;
use crate::tataru::TataruKernel;

/// Upper bound on the number of product-grid elements.
pub const QUADRUPLE_CAP: usize = 10_000_000;

/// Weights `(1/(1-eps), 1/(1+eps), 1, 1)` on the Tataru distances of the
/// `pi`, `mu`, `rho`, `gamma` components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TataruPenalty {
    pub eps: f64,
}

impl TataruPenalty {
    pub fn weights(&self) -> [f64; 4] {
        [1.0 / (1.0 - self.eps), 1.0 / (1.0 + self.eps), 1.0, 1.0]
    }

    /// `B(x, x~)` from the four component Tataru distances `[pi, mu, rho, gamma]`.
    pub fn combine(&self, dts: [f64; 4]) -> f64 {
        self.weights().iter().zip(dts).map(|(w, d)| w * d).sum()
    }

    /// `B(x, x~)` for quadruples given as `[pi, rho, mu, gamma]`.
    pub fn eval(&self, space: &dyn Space, x: &[StatePoint; 4], xt: &[StatePoint; 4], flow_dt: f64) -> Result<f64> {
        let dt = |a: &StatePoint, b: &StatePoint| -> Result<f64> {
            let d = space.distance(a, b)?;
            Ok(TataruKernel::new(space, b, flow_dt, d)?.value(a)?.value)
        };
        Ok(self.combine([dt(&x[0], &xt[0])?, dt(&x[2], &xt[2])?, dt(&x[1], &xt[1])?, dt(&x[3], &xt[3])?]))
    }
}

pub fn tataru_penalty(eps: f64) -> Result<TataruPenalty> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(usage(format!("eps = {eps} must lie in (0, 1/3)")));
    }
    Ok(TataruPenalty { eps })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuadrupleState {
    pub pi: StatePoint,
    pub rho: StatePoint,
    pub mu: StatePoint,
    pub gamma: StatePoint,
    pub alpha: f64,
    pub eps_alpha: f64,
    pub nu0: StatePoint,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuadrupleReport {
    pub alpha: f64,
    pub eps: f64,
    pub phi: f64,
    pub psi: f64,
    pub xi: f64,
    /// `alpha Psi(x_alpha)`.
    pub alpha_psi: f64,
    /// `alpha Psi(x_alpha) + Xi(x_alpha)`.
    pub trend: f64,
    /// `max(u - v) - Phi(x_alpha)` on the grid.
    pub duplication_gap: f64,
    /// `Xi(x_{alpha,0}) + eps < 1/alpha`.
    pub start_condition: bool,
    /// Whether the Ekeland start was the doubled-problem optimizer.
    pub started_at_x0: bool,
    pub ekeland: EkelandReport,
    pub iterations: usize,
    pub key: KeyEstimateReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadrupleConfig {
    pub alphas: Vec<f64>,
    pub nu0: StatePoint,
    pub c1: f64,
    pub flow_dt: f64,
    /// Samples for the quadratic lower-bound fit of `E`.
    pub fit_samples: usize,
}

/// Precomputed quantities on the subgrid shared by every alpha.
struct Tables {
    d2: Vec<f64>,
    dt: Vec<f64>,
    ebar: Vec<f64>,
}

fn tables(space: &dyn Space, grid: &[StatePoint], nu0: &StatePoint, c1: f64, c2: f64, flow_dt: f64) -> Result<Tables> {
    let n = grid.len();
    let mut d2 = vec![0.0; n * n];
    let mut dt = vec![0.0; n * n];
    let horizon = grid.iter().map(|p| grid.iter().map(|q| space.distance(p, q)).try_fold(0.0, |m: f64, d| d.map(|d| m.max(d)))).try_fold(0.0, |m: f64, d| d.map(|d| m.max(d)))?;
    for (j, q) in grid.iter().enumerate() {
        let kernel = TataruKernel::new(space, q, flow_dt, horizon)?;
        for (i, p) in grid.iter().enumerate() {
            let d = space.distance(p, q)?;
            d2[i * n + j] = d * d;
            dt[i * n + j] = kernel.value(p)?.value;
        }
    }
    let ebar = grid
        .iter()
        .map(|p| {
            let d = space.distance(p, nu0)?;
            Ok(space.energy(p).to_f64() + 0.5 * c1 * d * d + c2)
        })
        .collect::<Result<_>>()?;
    Ok(Tables { d2, dt, ebar })
}

#[inline]
fn split(idx: usize, n: usize) -> [usize; 4] {
    [idx / (n * n * n), (idx / (n * n)) % n, (idx / n) % n, idx % n]
}

/// Runs the construction for each alpha in the schedule. `u` and `v` must share a grid;
/// product-grid indices are `((pi n + rho) n + mu) n + gamma`.
pub fn quadruplicate(space: &dyn Space, u: &GridFunction, v: &GridFunction, cfg: &QuadrupleConfig) -> Result<Vec<(QuadrupleState, QuadrupleReport)>> {
    if u.grid != v.grid {
        return Err(usage("u and v must share a grid"));
    }
    let n = u.len();
    if n == 0 {
        return Err(usage("empty grid"));
    }
    let total = n.checked_pow(4).filter(|&t| t <= QUADRUPLE_CAP).ok_or_else(|| Error::Config(format!("product grid {n}^4 exceeds the cap of {QUADRUPLE_CAP} points")))?;
    if cfg.alphas.is_empty() || cfg.alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(usage("alpha schedule must be a non-empty list of positive values"));
    }
    let (c2, _) = fit_quadratic_lower_bound(space, &cfg.nu0, cfg.c1, cfg.fit_samples)?;
    let tb = tables(space, &u.grid, &cfg.nu0, cfg.c1, c2, cfg.flow_dt)?;
    let sup_diff = u.values.iter().zip(&v.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);

    let mut out = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        // doubled problem: (pi0, mu0) maximizing u(pi) - v(mu) - alpha/2 d^2(pi, mu)
        let mut best = (0, 0, f64::NEG_INFINITY);
        for i in 0..n {
            for k in 0..n {
                let val = u.values[i] - v.values[k] - 0.5 * alpha * tb.d2[i * n + k];
                if val > best.2 {
                    best = (i, k, val);
                }
            }
        }
        let (p0, m0) = (best.0, best.1);
        let s = tb.ebar[p0] + tb.ebar[m0];
        let eps = (0.25f64).min(0.5 / alpha / (s + 1.0));
        let pen = tataru_penalty(eps)?;
        let (wp, wm) = (1.0 / (1.0 - eps), 1.0 / (1.0 + eps));
        let psi = |[i, j, k, l]: [usize; 4]| 0.5 * wp * tb.d2[i * n + j] + 0.5 * tb.d2[j * n + l] + 0.5 * wm * tb.d2[l * n + k];
        let xi = |[_, j, _, l]: [usize; 4]| eps * wp * tb.ebar[j] + eps * wm * tb.ebar[l];
        let phi = |[i, _, k, _]: [usize; 4]| wp * u.values[i] - wm * v.values[k];
        let x0 = ((p0 * n + p0) * n + m0) * n + m0;
        let xi0 = xi(split(x0, n));
        let start_condition = xi0 + eps < 1.0 / alpha;

        let g: Vec<f64> = (0..total)
            .map(|idx| {
                let c = split(idx, n);
                phi(c) - alpha * psi(c) - xi(c)
            })
            .collect();
        let delta = 1.0 / alpha;
        let sup_g = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let started_at_x0 = g[x0] >= sup_g - 0.5 * delta * delta;
        let x_hat = if started_at_x0 { x0 } else { g.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b }).0 };
        let b = |y: usize, x: usize| {
            let (a, c) = (split(y, n), split(x, n));
            pen.combine([tb.dt[a[0] * n + c[0]], tb.dt[a[2] * n + c[2]], tb.dt[a[1] * n + c[1]], tb.dt[a[3] * n + c[3]]])
        };
        let problem = EkelandProblem { g: &g, b: &b, delta, x_hat };
        let res = ekeland_optimize(&problem)?;
        let ek = verify_ekeland(&problem, &res, 1e-9)?;
        let c = split(res.x_delta, n);
        let state = QuadrupleState {
            pi: u.grid[c[0]].clone(),
            rho: u.grid[c[1]].clone(),
            mu: u.grid[c[2]].clone(),
            gamma: u.grid[c[3]].clone(),
            alpha,
            eps_alpha: eps,
            nu0: cfg.nu0.clone(),
            c1: cfg.c1,
            c2,
        };
        let key = verify_key_estimates(space, &state)?;
        let (ph, ps, x) = (phi(c), psi(c), xi(c));
        out.push((
            state,
            QuadrupleReport {
                alpha,
                eps,
                phi: ph,
                psi: ps,
                xi: x,
                alpha_psi: alpha * ps,
                trend: alpha * ps + x,
                duplication_gap: sup_diff - ph,
                start_condition,
                started_at_x0,
                ekeland: ek,
                iterations: res.iterations,
                key,
            },
        ));
    }
    Ok(out)
}

/// Smallest `C` with `max(u - v) <= Phi(x_alpha) + C alpha^{-1/2}` over the run.
pub fn fitted_duplication_constant(reports: &[QuadrupleReport]) -> f64 {
    reports.iter().map(|r| r.duplication_gap.max(0.0) * libm::sqrt(r.alpha)).fold(0.0, f64::max)
}
