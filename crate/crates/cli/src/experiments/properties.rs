use evikit_core::ekeland::*;
use evikit_core::hj::{hamiltonian_sandwich_check, SandwichReport};
use evikit_core::space::*;
use evikit_core::spaces::{mccann_check, Integrand, McCannReport};
use evikit_core::{Space, StatePoint};
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{par_max, Assertion};
use crate::config::{EkelandSpec, PropertiesParams};
use crate::error::{CliError, CliResult};
use crate::output::Output;
use crate::spaces::BuiltSpace;

fn uniform(rng: &mut dyn RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
}

fn index(rng: &mut dyn RngCore, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

#[derive(Serialize)]
struct Sweeps {
    samples: usize,
    tolerances: Tolerances,
    metric: MetricReport,
    geodesic: f64,
    convexity: f64,
}

#[derive(Serialize)]
struct EkelandSummary {
    problems: usize,
    largest: usize,
    failures: usize,
    worst_invariant1: f64,
    worst_invariant2: f64,
    min_uniqueness_margin: f64,
    worst_consequence_a: f64,
}

#[derive(Serialize)]
struct McCannRow {
    integrand: String,
    expect_pass: bool,
    report: McCannReport,
}

#[derive(Serialize)]
struct PropertiesOut {
    space: String,
    sweeps: Option<Sweeps>,
    sandwich: Option<SandwichReport>,
    jensen_max_violation: Option<f64>,
    ekeland: Option<EkelandSummary>,
    mccann: Vec<McCannRow>,
}

struct FiniteProblem {
    g: Vec<f64>,
    b: Vec<f64>,
    delta: f64,
    start: usize,
    near_optimal: bool,
}

fn ekeland_problems(space: &dyn Space, spec: &EkelandSpec, rng: &mut ChaCha8Rng) -> CliResult<EkelandSummary> {
    let mut problems = Vec::with_capacity(2 * spec.problems);
    for _ in 0..spec.problems {
        let m = 2 + index(rng, spec.max_points - 1);
        let pts: Vec<StatePoint> = (0..m).map(|_| space.sample_point(rng)).collect();
        let mut b = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                b[i * m + j] = space.distance(&pts[i], &pts[j])?;
            }
        }
        let g: Vec<f64> = (0..m).map(|_| uniform(rng, -1.0, 1.0)).collect();
        let delta = uniform(rng, spec.delta_range[0], spec.delta_range[1]);
        let top = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let near: Vec<usize> = (0..m).filter(|&i| g[i] >= top - 0.5 * delta * delta).collect();
        let near_start = near[index(rng, near.len())];
        let any_start = index(rng, m);
        problems.push(FiniteProblem { g: g.clone(), b: b.clone(), delta, start: near_start, near_optimal: true });
        problems.push(FiniteProblem { g, b, delta, start: any_start, near_optimal: false });
    }
    let reports: Vec<(EkelandReport, bool)> = problems
        .par_iter()
        .map(|fp| {
            let m = fp.g.len();
            let b = |i: usize, j: usize| fp.b[i * m + j];
            let p = EkelandProblem { g: &fp.g, b: &b, delta: fp.delta, x_hat: fp.start };
            let r = ekeland_optimize(&p)?;
            let rep = verify_ekeland(&p, &r, spec.tol)?;
            let ok = rep.pass && (!fp.near_optimal || rep.consequence_a.is_some());
            Ok((rep, ok))
        })
        .collect::<evikit_core::Result<_>>()?;
    Ok(EkelandSummary {
        problems: problems.len(),
        largest: problems.iter().map(|p| p.g.len()).max().unwrap_or(0),
        failures: reports.iter().filter(|(_, ok)| !ok).count(),
        worst_invariant1: reports.iter().map(|(r, _)| r.invariant1).fold(f64::NEG_INFINITY, f64::max),
        worst_invariant2: reports.iter().map(|(r, _)| r.invariant2).fold(f64::NEG_INFINITY, f64::max),
        min_uniqueness_margin: reports.iter().map(|(r, _)| r.uniqueness_margin).fold(f64::INFINITY, f64::min),
        worst_consequence_a: reports.iter().filter_map(|(r, _)| r.consequence_a).fold(f64::NEG_INFINITY, f64::max),
    })
}

pub fn run(p: &PropertiesParams, sp: &BuiltSpace, rng: &mut ChaCha8Rng, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let space = sp.space();
    let mut checks = Vec::new();

    let sweeps = if p.samples > 0 {
        let tol = space.tolerances();
        let triples = sample_triples(space, rng, p.samples);
        let pairs = sample_pairs(space, rng, p.samples);
        let parts: Vec<MetricReport> = triples.par_chunks(50).map(|c| verify_metric_axioms(space, c)).collect::<evikit_core::Result<_>>()?;
        let metric = parts.into_iter().fold(MetricReport::default(), |a, b| MetricReport {
            symmetry: a.symmetry.max(b.symmetry),
            identity: a.identity.max(b.identity),
            triangle: a.triangle.max(b.triangle),
            nonnegativity: a.nonnegativity.max(b.nonnegativity),
        });
        let geodesic = par_max(&pairs, 10, |c| c.iter().map(|(a, b)| verify_geodesic_property(space, a, b)).try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v))))?;
        let convexity = par_max(&pairs, 50, |c| verify_kappa_convexity(space, c))?;
        checks.push(Assertion::at_most("metric_axioms", metric.worst(), tol.metric));
        checks.push(Assertion::at_most("geodesic_property", geodesic, tol.geodesic));
        checks.push(Assertion::at_most("kappa_convexity", convexity, tol.convexity));
        Some(Sweeps { samples: p.samples, tolerances: tol, metric, geodesic, convexity })
    } else {
        None
    };

    let sandwich = match &p.sandwich {
        Some(s) => {
            let refs = sp.points(&s.refs, "experiment.sandwich.refs")?;
            let samples = sp.points(&s.samples, "experiment.sandwich.samples")?;
            let r = hamiltonian_sandwich_check(space, &s.a_values, &refs, &samples)?;
            checks.push(Assertion::at_most("sandwich_violation", r.max_violation(), s.tol));
            Some(r)
        }
        None => None,
    };

    let jensen = match &p.jensen {
        Some(j) => {
            if j.eps.iter().any(|&e| e >= 1.0 / 3.0) {
                return Err(CliError::config("experiment.jensen.eps values must lie in (0, 1/3)"));
            }
            let quads: Vec<[StatePoint; 4]> = (0..j.samples).map(|_| [(); 4].map(|_| space.sample_point(rng))).collect();
            let v = par_max(&quads, 500, |c| jensen_distance_check(space, c, &j.eps, &j.eps))?;
            checks.push(Assertion::at_most("jensen_violation", v, j.tol));
            Some(v)
        }
        None => None,
    };

    let ekeland = match &p.ekeland {
        Some(e) => {
            let summary = ekeland_problems(space, e, rng)?;
            checks.push(Assertion::at_most("ekeland_failures", summary.failures as f64, 0.0));
            Some(summary)
        }
        None => None,
    };

    let mut mccann = Vec::new();
    for (i, case) in p.mccann.iter().enumerate() {
        let f = Integrand::parse(&case.integrand).map_err(|e| CliError::config(format!("experiment.mccann[{i}].integrand: {e}")))?;
        let report = mccann_check(&|x| f.value(x), p.mccann_s_max)?;
        checks.push(Assertion::holds(format!("mccann[{i}] {} pass == {}", case.integrand, case.expect_pass), report.pass == case.expect_pass));
        if let Some(name) = &case.expect_violation {
            checks.push(Assertion::holds(format!("mccann[{i}] names {name}"), report.violations.iter().any(|v| v.contains(name.as_str()))));
        }
        mccann.push(McCannRow { integrand: case.integrand.clone(), expect_pass: case.expect_pass, report });
    }

    out.json("properties.json", &PropertiesOut { space: describe(space), sweeps, sandwich, jensen_max_violation: jensen, ekeland, mccann })?;
    Ok(checks)
}
