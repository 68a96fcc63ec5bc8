use evikit_core::flow::*;
use evikit_core::space::describe;
use evikit_core::{Space, StatePoint};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::Assertion;
use crate::config::{EviParams, FlowParams, Method};
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};
use crate::spaces::BuiltSpace;

fn trajectory(space: &dyn Space, start: &StatePoint, method: Method, dt: f64, horizon: f64, inner: Option<f64>, max_iter: Option<usize>) -> CliResult<Trajectory> {
    let mut cfg = FlowConfig::new(dt, horizon);
    if let Some(t) = inner {
        cfg.jko_inner_tol = t;
    }
    if let Some(m) = max_iter {
        cfg.jko_max_iter = m;
    }
    let tr = match method {
        Method::Auto => flow_auto(space, start, &cfg),
        Method::Exact => flow_exact(space, start, horizon, dt),
        Method::Mms => flow_mms(space, start, &cfg),
    };
    Ok(tr?)
}

fn write_trajectory(space: &dyn Space, tr: &Trajectory, out: &mut Output) -> CliResult<()> {
    let dim = tr.start().dim();
    let mut header = vec!["t".to_string()];
    header.extend((0..dim).map(|i| format!("coord_{i}")));
    let rows = tr.times.iter().zip(&tr.states).map(|(t, s)| std::iter::once(num(*t)).chain(s.coords().iter().map(|c| num(*c))).collect());
    out.csv("trajectory.csv", &header, rows)?;
    let rows = tr.times.iter().zip(&tr.states).map(|(t, s)| vec![num(*t), num(space.energy(s).to_f64()), num(space.information(s).to_f64())]);
    out.csv("energy.csv", &["t", "energy", "information"], rows)
}

#[derive(Serialize)]
struct ConvergenceRow {
    dt: f64,
    endpoint_error: f64,
}

#[derive(Serialize)]
struct FlowReport {
    space: String,
    method: Method,
    dt: f64,
    horizon: f64,
    steps: usize,
    energy_start: f64,
    energy_end: f64,
    energy_drop: f64,
    information_integral: f64,
    max_energy_increase: f64,
    energy_identity_residual: f64,
    contraction_violation: Option<f64>,
    endpoint_error: Option<f64>,
    convergence: Vec<ConvergenceRow>,
    convergence_ratios: Vec<f64>,
}

pub fn run_flow(p: &FlowParams, sp: &BuiltSpace, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let space = sp.space();
    let start = sp.point(&p.start, "experiment.start")?;
    let tr = trajectory(space, &start, p.method, p.dt, p.horizon, p.jko_inner_tol, p.jko_max_iter)?;
    write_trajectory(space, &tr, out)?;

    let energies: Vec<f64> = tr.states.iter().map(|s| space.energy(s).to_f64()).collect();
    let info: Vec<f64> = tr.states.iter().map(|s| space.information(s).to_f64()).collect();
    let integral: f64 = tr.times.windows(2).zip(info.windows(2)).map(|(t, i)| 0.5 * (i[0] + i[1]) * (t[1] - t[0])).sum();
    let max_increase = energies.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let residual = verify_energy_identity(space, &tr)?.to_f64();

    let mut checks = Vec::new();
    if p.assert_energy_monotone {
        checks.push(Assertion::at_most("energy_increase", max_increase, 1e-12 * (1.0 + energies[0].abs())));
    }
    if let Some(tol) = p.energy_identity_tol {
        checks.push(Assertion::at_most("energy_identity_residual", residual, tol));
    }
    let contraction = match &p.partner {
        Some(q) => {
            let q = sp.point(q, "experiment.partner")?;
            let v = verify_contraction(space, &start, &q, p.horizon, p.dt)?;
            checks.push(Assertion::at_most("contraction_violation", v, p.contraction_tol));
            Some(v)
        }
        None => None,
    };

    let exact_end = space.exact_flow(&start, p.horizon);
    let needs_exact = p.reference_tol.is_some() || !p.convergence_dts.is_empty();
    if needs_exact && exact_end.is_none() {
        return Err(CliError::config(format!("experiment.reference_tol and experiment.convergence_dts need a closed-form flow from this start on {}", describe(space))));
    }
    let endpoint_error = match &exact_end {
        Some(e) => Some(space.distance(tr.end(), e)?),
        None => None,
    };
    if let (Some(tol), Some(err)) = (p.reference_tol, endpoint_error) {
        checks.push(Assertion::at_most("endpoint_error", err, tol));
    }

    let mut convergence = Vec::new();
    if let Some(exact) = &exact_end {
        let errors: Vec<f64> = p
            .convergence_dts
            .par_iter()
            .map(|&dt| -> CliResult<f64> {
                let t = trajectory(space, &start, p.method, dt, p.horizon, p.jko_inner_tol, p.jko_max_iter)?;
                Ok(space.distance(t.end(), exact)?)
            })
            .collect::<CliResult<_>>()?;
        convergence = p.convergence_dts.iter().zip(errors).map(|(&dt, endpoint_error)| ConvergenceRow { dt, endpoint_error }).collect();
    }
    let ratios: Vec<f64> = convergence.windows(2).map(|w| w[0].endpoint_error / w[1].endpoint_error).collect();
    for (i, r) in ratios.iter().enumerate() {
        let [lo, hi] = p.convergence_ratio;
        checks.push(Assertion { name: format!("convergence_ratio[{i}]"), value: Some(*r), bound: Some(lo), pass: (lo..=hi).contains(r) });
    }
    if !convergence.is_empty() {
        let rows = convergence.iter().map(|c| vec![num(c.dt), num(c.endpoint_error)]);
        out.csv("convergence.csv", &["dt", "endpoint_error"], rows)?;
    }

    let report = FlowReport {
        space: describe(space),
        method: p.method,
        dt: p.dt,
        horizon: p.horizon,
        steps: tr.len() - 1,
        energy_start: energies[0],
        energy_end: *energies.last().unwrap_or(&energies[0]),
        energy_drop: energies[0] - energies.last().unwrap_or(&energies[0]),
        information_integral: integral,
        max_energy_increase: max_increase,
        energy_identity_residual: residual,
        contraction_violation: contraction,
        endpoint_error,
        convergence,
        convergence_ratios: ratios,
    };
    out.json("flow_report.json", &report)?;
    Ok(checks)
}

#[derive(Serialize)]
struct EviOut<'a> {
    space: String,
    dt: f64,
    horizon: f64,
    tol: f64,
    pass: bool,
    #[serde(flatten)]
    report: &'a EviReport,
}

pub fn run_evi(p: &EviParams, sp: &BuiltSpace, rng: &mut ChaCha8Rng, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let space = sp.space();
    let start = sp.point(&p.start, "experiment.start")?;
    let mut probes = p.probes.iter().enumerate().map(|(i, q)| sp.point(q, &format!("experiment.probes[{i}]"))).collect::<CliResult<Vec<_>>>()?;
    probes.extend((0..p.probe_samples).map(|_| space.sample_point(rng)));
    let tr = trajectory(space, &start, p.method, p.dt, p.horizon, p.jko_inner_tol, p.jko_max_iter)?;
    write_trajectory(space, &tr, out)?;

    let chunks: Vec<EviReport> = probes.par_chunks(4).map(|c| verify_evi(space, &tr, c)).collect::<evikit_core::Result<_>>()?;
    let report = EviReport {
        max_violation: chunks.iter().map(|r| r.max_violation).fold(f64::NEG_INFINITY, f64::max),
        probe_count: probes.len(),
        per_probe: chunks.into_iter().flat_map(|r| r.per_probe).collect(),
    };
    let tol = p.tol.unwrap_or(10.0 * p.dt);
    let check = Assertion::at_most("evi_max_violation", report.max_violation, tol);
    let rows = report.per_probe.iter().enumerate().map(|(i, r)| vec![i.to_string(), num(r.t), num(r.lhs), num(r.rhs), num(r.lhs - r.rhs)]);
    out.csv("evi_probes.csv", &["probe", "t", "lhs", "rhs", "violation"], rows)?;
    out.json("evi_report.json", &EviOut { space: describe(space), dt: p.dt, horizon: p.horizon, tol, pass: check.pass, report: &report })?;
    Ok(vec![check])
}
