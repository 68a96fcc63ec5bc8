use std::path::Path;

use evikit_core::space::{describe, sample_pairs, sample_triples};
use evikit_core::tataru::*;
use evikit_core::{Space, StatePoint};
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{par_max, Assertion};
use crate::config::TataruParams;
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};
use crate::spaces::BuiltSpace;

fn read_pairs(path: &Path, space: &dyn Space) -> CliResult<Vec<(StatePoint, StatePoint)>> {
    let field = "experiment.pairs_csv";
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::config(format!("{field} {}: {e}", path.display())))?;
    let dim = space.dimension();
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::config(format!("{field} row {}: {e}", i + 1)))?;
        if rec.len() != 2 * dim {
            return Err(CliError::config(format!("{field} row {}: expected {} columns, found {}", i + 1, 2 * dim, rec.len())));
        }
        let vals = rec.iter().map(|s| s.trim().parse::<f64>()).collect::<Result<Vec<f64>, _>>().map_err(|e| CliError::config(format!("{field} row {}: {e}", i + 1)))?;
        let mk = |c: &[f64]| -> CliResult<StatePoint> {
            let p = StatePoint::new(c.to_vec()).map_err(|e| CliError::config(format!("{field} row {}: {e}", i + 1)))?;
            space.validate(&p).map_err(|e| CliError::config(format!("{field} row {}: {e}", i + 1)))?;
            Ok(p)
        };
        pairs.push((mk(&vals[..dim])?, mk(&vals[dim..])?));
    }
    Ok(pairs)
}

/// Pairs `(mu, nu)` with chart perturbations `(mu^, nu^)` of the first coordinate.
fn quadruples(space: &dyn Space, rng: &mut dyn RngCore, n: usize, jitter: f64) -> Vec<[StatePoint; 4]> {
    let uniform = |rng: &mut dyn RngCore| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    sample_pairs(space, rng, n)
        .into_iter()
        .map(|(mu, nu)| {
            let mut near = |p: &StatePoint| {
                let mut y = space.to_chart(p);
                y[0] += jitter * (2.0 * uniform(rng) - 1.0);
                space.project_chart(&mut y);
                space.from_chart(&y)
            };
            let (mh, nh) = (near(&mu), near(&nu));
            [mu, nu, mh, nh]
        })
        .collect()
}

#[derive(Serialize)]
struct Suites {
    samples: usize,
    lipschitz: f64,
    flow_lipschitz: f64,
    triangle: f64,
    tol: f64,
}

#[derive(Serialize)]
struct TataruReport {
    space: String,
    flow_dt: f64,
    pairs: usize,
    suites: Option<Suites>,
}

pub fn run(p: &TataruParams, sp: &BuiltSpace, rng: &mut ChaCha8Rng, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let space = sp.space();
    let mut pairs = Vec::new();
    let mut expect = Vec::new();
    for (i, pair) in p.pairs.iter().enumerate() {
        pairs.push((sp.point(&pair.pi, &format!("experiment.pairs[{i}].pi"))?, sp.point(&pair.rho, &format!("experiment.pairs[{i}].rho"))?));
        expect.push((pair.expect_value, pair.expect_t_star));
    }
    if let Some(path) = &p.pairs_csv {
        let extra = read_pairs(path, space)?;
        expect.extend(std::iter::repeat((None, None)).take(extra.len()));
        pairs.extend(extra);
    }

    let results: Vec<TataruResult> = pairs.par_iter().map(|(pi, rho)| tataru_distance(space, pi, rho, p.flow_dt)).collect::<evikit_core::Result<_>>()?;
    let mut checks = Vec::new();
    for (i, (r, (ev, et))) in results.iter().zip(&expect).enumerate() {
        if let Some(v) = ev {
            checks.push(Assertion::at_most(format!("pair[{i}].value_error"), (r.value - v).abs(), p.value_tol));
        }
        if let Some(t) = et {
            checks.push(Assertion::at_most(format!("pair[{i}].t_star_error"), (r.t_star - t).abs(), p.t_star_tol));
        }
    }
    if !pairs.is_empty() {
        let rows = results.iter().enumerate().map(|(i, r)| vec![i.to_string(), num(r.value), num(r.t_star)]);
        out.csv("tataru_values.csv", &["pair", "value", "t_star"], rows)?;
    }

    let suites = if p.samples > 0 {
        let n = p.samples;
        let quads = quadruples(space, rng, n, p.jitter);
        let flow_pairs = sample_pairs(space, rng, n);
        let triples = sample_triples(space, rng, n);
        let lipschitz = par_max(&quads, 50, |c| verify_tataru_lipschitz(space, c, p.flow_dt))?;
        let flow_lipschitz = par_max(&flow_pairs, 50, |c| verify_tataru_flow_lipschitz(space, c, &p.r_values, p.flow_lipschitz_dt))?;
        let triangle = par_max(&triples, 50, |c| verify_tataru_triangle(space, c, p.flow_dt))?;
        checks.push(Assertion::at_most("lipschitz_violation", lipschitz, p.suite_tol));
        checks.push(Assertion::at_most("flow_lipschitz_violation", flow_lipschitz, p.suite_tol));
        checks.push(Assertion::at_most("triangle_violation", triangle, p.suite_tol));
        Some(Suites { samples: n, lipschitz, flow_lipschitz, triangle, tol: p.suite_tol })
    } else {
        None
    };
    out.json("tataru_report.json", &TataruReport { space: describe(space), flow_dt: p.flow_dt, pairs: pairs.len(), suites })?;
    Ok(checks)
}
