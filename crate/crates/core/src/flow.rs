//! Gradient-flow engines and the EVI consequence verifiers.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{numerical, usage, Error, Result};
use crate::ext::ExtReal;
use crate::math;
use crate::point::StatePoint;
use crate::space::Space;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowConfig {
    pub dt: f64,
    pub horizon: f64,
    pub jko_inner_tol: f64,
    pub jko_max_iter: usize,
}

impl FlowConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        FlowConfig { dt, horizon, jko_inner_tol: 1e-11, jko_max_iter: 20_000 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(usage(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(usage(format!("horizon must be positive (got {})", self.horizon)));
        }
        if self.dt > self.horizon {
            return Err(usage("dt must not exceed the horizon"));
        }
        if !(self.jko_inner_tol > 0.0) {
            return Err(usage("jko_inner_tol must be positive"));
        }
        if self.jko_max_iter == 0 {
            return Err(usage("jko_max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub space_id: String,
    pub times: Vec<f64>,
    pub states: Vec<StatePoint>,
}

impl Trajectory {
    pub fn start(&self) -> &StatePoint {
        &self.states[0]
    }

    pub fn end(&self) -> &StatePoint {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `0, dt, 2dt, ..., T` with the last step shortened to land on T.
fn time_grid(dt: f64, horizon: f64) -> Vec<f64> {
    let n = libm::ceil(horizon / dt - 1e-9) as usize;
    (0..=n).map(|k| if k == n { horizon } else { k as f64 * dt }).collect()
}

pub fn flow_exact(space: &dyn Space, p: &StatePoint, horizon: f64, dt: f64) -> Result<Trajectory> {
    FlowConfig::new(dt, horizon).validate()?;
    space.validate(p)?;
    let times = time_grid(dt, horizon);
    let mut states = Vec::with_capacity(times.len());
    for &t in &times {
        let s = if t == 0.0 { Some(p.clone()) } else { space.exact_flow(p, t) };
        match s {
            Some(s) => states.push(s),
            None => return Err(Error::Unsupported(format!("no closed-form flow registered for this {} state", space.id()))),
        }
    }
    Ok(Trajectory { space_id: space.id().into(), times, states })
}

/// Minimizing-movement (JKO) trajectory.
pub fn flow_mms(space: &dyn Space, p: &StatePoint, cfg: &FlowConfig) -> Result<Trajectory> {
    cfg.validate()?;
    space.validate(p)?;
    let times = time_grid(cfg.dt, cfg.horizon);
    let mut states = Vec::with_capacity(times.len());
    states.push(p.clone());
    let mut y = space.to_chart(p);
    for w in times.windows(2) {
        y = jko_step(space, &y, w[1] - w[0], cfg.jko_inner_tol, cfg.jko_max_iter)?;
        states.push(space.from_chart(&y));
    }
    Ok(Trajectory { space_id: space.id().into(), times, states })
}

/// Exact flow when registered, minimizing movement otherwise.
pub fn flow_auto(space: &dyn Space, p: &StatePoint, cfg: &FlowConfig) -> Result<Trajectory> {
    match flow_exact(space, p, cfg.horizon, cfg.dt) {
        Err(Error::Unsupported(_)) => flow_mms(space, p, cfg),
        other => other,
    }
}

/// `S[p](t)`: closed form or an MMS run with step `dt`.
pub fn flow_point(space: &dyn Space, p: &StatePoint, t: f64, dt: f64) -> Result<StatePoint> {
    if t == 0.0 {
        return Ok(p.clone());
    }
    if let Some(q) = space.exact_flow(p, t) {
        return Ok(q);
    }
    let cfg = FlowConfig::new(dt.min(t), t);
    Ok(flow_mms(space, p, &cfg)?.end().clone())
}

/// One step `argmin_y E(y) + |y - y_prev|^2 / (2 tau)` in the chart by
/// spectral projected gradient with a nonmonotone Armijo search.
pub fn jko_step(space: &dyn Space, y_prev: &[f64], tau: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let objective = |y: &[f64]| -> f64 {
        match space.chart_energy(y) {
            ExtReal::Finite(e) => e + math::dist_sq(y, y_prev) / (2.0 * tau),
            _ => f64::INFINITY,
        }
    };
    let gradient = |y: &[f64]| -> Option<Vec<f64>> {
        space.chart_gradient(y).map(|g| g.iter().zip(y.iter().zip(y_prev)).map(|(gi, (a, b))| gi + (a - b) / tau).collect())
    };
    let proj_step = |y: &[f64], g: &[f64], step: f64| -> Vec<f64> {
        let mut z: Vec<f64> = y.iter().zip(g).map(|(a, b)| a - step * b).collect();
        space.project_chart(&mut z);
        z
    };

    let mut y = y_prev.to_vec();
    space.project_chart(&mut y);
    let mut fy = objective(&y);
    if !fy.is_finite() {
        return Err(numerical("JKO step started outside the energy domain", f64::INFINITY));
    }
    let mut g = gradient(&y).ok_or_else(|| numerical("energy gradient undefined at JKO start", f64::INFINITY))?;
    let mut step = tau;
    let mut history = vec![fy; 1];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let pg = proj_step(&y, &g, 1.0);
        residual = math::dist(&pg, &y);
        if residual <= tol {
            return Ok(y);
        }
        let trial = proj_step(&y, &g, step);
        let d: Vec<f64> = trial.iter().zip(&y).map(|(a, b)| a - b).collect();
        let slope = math::dot(&g, &d);
        let f_ref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut lam = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + lam * b).collect();
            let fc = objective(&cand);
            if fc <= f_ref + 1e-4 * lam * slope {
                accepted = Some((cand, fc));
                break;
            }
            lam *= 0.5;
        }
        let Some((y_new, f_new)) = accepted else {
            // Rounding floor: no representable decrease left along the search direction.
            if residual <= 1e3 * tol.max(1e-13) {
                return Ok(y);
            }
            return Err(numerical("JKO line search stalled", residual));
        };
        let g_new = gradient(&y_new).ok_or_else(|| numerical("energy gradient undefined inside JKO step", residual))?;
        let s: Vec<f64> = y_new.iter().zip(&y).map(|(a, b)| a - b).collect();
        let yy: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = math::dot(&s, &yy);
        step = if sy > 0.0 { (math::dot(&s, &s) / sy).clamp(1e-14, 1e14) } else { 1e4 * tau };
        y = y_new;
        fy = f_new;
        g = g_new;
        history.push(fy);
        if history.len() > 8 {
            history.remove(0);
        }
    }
    Err(numerical(format!("JKO inner solver did not converge in {max_iter} iterations"), residual))
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EviRecord {
    pub probe: StatePoint,
    /// Time of the worst violation for this probe.
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EviReport {
    pub max_violation: f64,
    pub probe_count: usize,
    pub per_probe: Vec<EviRecord>,
}

/// Checks `(d^2(g(t+dt),r) - d^2(g(t),r)) / (2 dt) <= E(r) - E(g(t)) - k/2 d^2(g(t),r)`
/// along the trajectory for every probe `r`.
pub fn verify_evi(space: &dyn Space, traj: &Trajectory, probes: &[StatePoint]) -> Result<EviReport> {
    let kappa = space.kappa();
    let energies: Vec<ExtReal> = traj.states.iter().map(|s| space.energy(s)).collect();
    let mut per_probe = Vec::with_capacity(probes.len());
    let mut max_violation = f64::NEG_INFINITY;
    for rho in probes {
        let e_rho = space.energy(rho).finite().ok_or_else(|| usage("EVI probes must have finite energy"))?;
        let d2: Vec<f64> = traj.states.iter().map(|s| space.distance(s, rho).map(|d| d * d)).collect::<Result<_>>()?;
        let mut worst = EviRecord { probe: rho.clone(), t: 0.0, lhs: f64::NEG_INFINITY, rhs: 0.0 };
        let mut worst_v = f64::NEG_INFINITY;
        for k in 0..traj.len() - 1 {
            let Some(e_k) = energies[k].finite() else { continue };
            let lhs = 0.5 * (d2[k + 1] - d2[k]) / (traj.times[k + 1] - traj.times[k]);
            let rhs = e_rho - e_k - 0.5 * kappa * d2[k];
            if lhs - rhs > worst_v {
                worst_v = lhs - rhs;
                worst = EviRecord { probe: rho.clone(), t: traj.times[k], lhs, rhs };
            }
        }
        max_violation = max_violation.max(worst_v);
        per_probe.push(worst);
    }
    Ok(EviReport { max_violation, probe_count: probes.len(), per_probe })
}

/// `max_t d(p(t), q(t)) - e^{-k t} d(p, q)` over a common time grid.
pub fn verify_contraction(space: &dyn Space, p: &StatePoint, q: &StatePoint, horizon: f64, dt: f64) -> Result<f64> {
    let cfg = FlowConfig::new(dt, horizon);
    let tp = flow_auto(space, p, &cfg)?;
    let tq = flow_auto(space, q, &cfg)?;
    let d0 = space.distance(p, q)?;
    let kappa = space.kappa();
    let mut worst = f64::NEG_INFINITY;
    for ((t, a), b) in tp.times.iter().zip(&tp.states).zip(&tq.states) {
        worst = worst.max(space.distance(a, b)? - libm::exp(-kappa * t) * d0);
    }
    Ok(worst)
}

/// `|E(end) - E(start) + int I|` with trapezoid quadrature.
pub fn verify_energy_identity(space: &dyn Space, traj: &Trajectory) -> Result<ExtReal> {
    let e_start = space.energy(traj.start());
    if !e_start.is_finite() {
        return Err(usage("energy identity needs E(start) < inf"));
    }
    let info: Vec<ExtReal> = traj.states.iter().map(|s| space.information(s)).collect();
    // I(start) may be infinite; I is finite for t > 0, so the start node is dropped.
    let first = if info[0].is_finite() { 0 } else { 1 };
    if first >= traj.len() {
        return Ok(ExtReal::PosInf);
    }
    let mut integral = 0.0;
    for k in first..traj.len() - 1 {
        match (info[k], info[k + 1]) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => integral += 0.5 * (a + b) * (traj.times[k + 1] - traj.times[k]),
            _ => return Ok(ExtReal::PosInf),
        }
    }
    let e_from = space.energy(&traj.states[first]);
    let e_end = space.energy(traj.end());
    Ok(match (e_end, e_from) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite((a - b + integral).abs()),
        _ => ExtReal::PosInf,
    })
}

/// Estimates `inf E(pi) + c1/2 d^2(pi, nu0)` over a chart cloud around `nu0`
/// (rays along probe directions at log-spaced radii, then a compass search
/// from the best sample). Returns `(c2, min_estimate)` with `c2 = -min`.
pub fn fit_quadratic_lower_bound(space: &dyn Space, nu0: &StatePoint, c1: f64, sample_count: usize) -> Result<(f64, f64)> {
    if !(c1 > -space.kappa()) {
        return Err(usage(format!("c1 = {c1} must exceed -kappa = {}", -space.kappa())));
    }
    space.validate(nu0)?;
    let y0 = space.to_chart(nu0);
    let n = y0.len();
    let ebar = |y: &[f64]| -> f64 {
        match space.chart_energy(y) {
            ExtReal::Finite(e) => e + 0.5 * c1 * math::dist_sq(y, &y0),
            _ => f64::INFINITY,
        }
    };
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e.clone());
        e[i] = -1.0;
        dirs.push(e);
    }
    if n > 1 {
        let ones = vec![1.0 / libm::sqrt(n as f64); n];
        dirs.push(ones.clone());
        dirs.push(ones.iter().map(|v| -v).collect());
    }
    let shells = (sample_count / dirs.len()).clamp(8, 400);
    let radii = math::logspace(-3.0, 3.0, shells);
    let mut best = (ebar(&y0), y0.clone());
    let mut shell_min = vec![f64::INFINITY; shells];
    for (j, r) in radii.iter().enumerate() {
        for d in &dirs {
            let mut y: Vec<f64> = y0.iter().zip(d).map(|(a, b)| a + r * space.scale() * b).collect();
            space.project_chart(&mut y);
            let v = ebar(&y);
            shell_min[j] = shell_min[j].min(v);
            if v < best.0 {
                best = (v, y);
            }
        }
    }
    let tail = &shell_min[shells - 3..];
    if tail[2] < tail[1] && tail[1] < tail[0] && tail[2] <= best.0 && tail[2] < -1e6 {
        return Err(numerical("energy + c1/2 d^2 appears unbounded below along the sample schedule", tail[2]));
    }
    // compass search refinement
    let (mut fbest, mut ybest) = best;
    let mut h = 0.1 * space.scale();
    while h > 1e-10 * space.scale() {
        let mut improved = false;
        for d in &dirs {
            let mut y: Vec<f64> = ybest.iter().zip(d).map(|(a, b)| a + h * b).collect();
            space.project_chart(&mut y);
            let v = ebar(&y);
            if v < fbest {
                fbest = v;
                ybest = y;
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    if !fbest.is_finite() {
        return Err(numerical("no finite-energy sample found", fbest));
    }
    Ok((-fbest, fbest))
}
