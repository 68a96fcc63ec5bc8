use evikit_core::ekeland::*;
use evikit_core::space::describe;
use rayon::prelude::*;
use serde::Serialize;

use super::hj::solve;
use super::Assertion;
use crate::config::QuadruplicationParams;
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};
use crate::spaces::BuiltSpace;

#[derive(Serialize)]
struct Row {
    state: QuadrupleState,
    report: QuadrupleReport,
}

#[derive(Serialize)]
struct QuadOut {
    space: String,
    data: String,
    lambda: f64,
    delta: f64,
    subgrid_points: usize,
    product_points: usize,
    fitted_duplication_constant: f64,
    results: Vec<Row>,
}

pub fn run(p: &QuadruplicationParams, sp: &BuiltSpace, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let space = sp.space();
    let idx: Vec<usize> = (p.subgrid.start..=p.subgrid.end).step_by(p.subgrid.step).collect();
    let n = idx.len();
    if n.checked_pow(4).map_or(true, |t| t > QUADRUPLE_CAP) {
        return Err(CliError::config(format!("experiment.subgrid has {n} points; {n}^4 exceeds the product-grid cap of {QUADRUPLE_CAP}")));
    }
    let nu0 = sp.point(&p.nu0, "experiment.nu0")?;
    let spec = &p.resolvent;
    let u = solve(sp, spec, 0.0, spec.tol)?;
    let v = solve(sp, spec, p.delta, spec.tol)?;
    let (uf, vf) = (u.sol.f.subset(&idx), v.sol.f.subset(&idx));

    // alpha cells are independent; collect keeps schedule order
    let results: Vec<(QuadrupleState, QuadrupleReport)> = p
        .alphas
        .par_iter()
        .map(|&alpha| {
            let cfg = QuadrupleConfig { alphas: vec![alpha], nu0: nu0.clone(), c1: p.c1, flow_dt: p.flow_dt, fit_samples: p.fit_samples };
            quadruplicate(space, &uf, &vf, &cfg).map(|mut r| r.remove(0))
        })
        .collect::<evikit_core::Result<_>>()?;
    let reports: Vec<QuadrupleReport> = results.iter().map(|(_, r)| r.clone()).collect();

    let trend: Vec<f64> = reports.iter().map(|r| r.trend).collect();
    let k1: Vec<f64> = reports.iter().map(|r| r.key.key1_residual).collect();
    let k2: Vec<f64> = reports.iter().map(|r| r.key.key2_residual).collect();
    let mut checks = vec![Assertion::holds("trend_nonincreasing", trend.windows(2).all(|w| w[1] <= w[0]))];
    if trend.len() >= 2 {
        let ratio = if trend[0] > 0.0 { trend[trend.len() - 1] / trend[0] } else { 0.0 };
        checks.push(Assertion::at_most("trend_ratio", ratio, p.trend_ratio));
        checks.push(Assertion::holds("key1_residuals_shrink", residuals_shrink(&k1, p.key_shrink)));
        checks.push(Assertion::holds("key2_residuals_shrink", residuals_shrink(&k2, p.key_shrink)));
    }
    checks.push(Assertion::holds("ekeland_invariants", reports.iter().all(|r| r.ekeland.pass)));

    let rows = reports.iter().map(|r| {
        vec![num(r.alpha), num(r.eps), num(r.phi), num(r.psi), num(r.xi), num(r.alpha_psi), num(r.trend), num(r.key.key1_residual), num(r.key.key2_residual), num(r.duplication_gap), r.iterations.to_string()]
    });
    out.csv("quadruplication.csv", &["alpha", "eps", "phi", "psi", "xi", "alpha_psi", "trend", "key1_residual", "key2_residual", "duplication_gap", "ekeland_iterations"], rows)?;
    let report = QuadOut {
        space: describe(space),
        data: u.data.name(),
        lambda: spec.lambda,
        delta: p.delta,
        subgrid_points: n,
        product_points: n.pow(4),
        fitted_duplication_constant: fitted_duplication_constant(&reports),
        results: results.into_iter().map(|(state, report)| Row { state, report }).collect(),
    };
    out.json("quadruplication.json", &report)?;
    Ok(checks)
}
