use evikit_core::hj::*;
use evikit_core::math::linspace;
use evikit_core::space::describe;
use evikit_core::StatePoint;
use rayon::prelude::*;
use serde::Serialize;

use super::Assertion;
use crate::config::{ComparisonParams, ResolventParams, ResolventSpec, ViscosityParams};
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};
use crate::spaces::BuiltSpace;

pub(super) struct Solved {
    pub data: DataFunction,
    /// `h - shift` on the grid.
    pub h: GridFunction,
    pub sol: ResolventSolution,
    pub dx: f64,
}

/// Solves `f - lambda H f = h - shift` on the spec's grid.
pub(super) fn solve(sp: &BuiltSpace, spec: &ResolventSpec, shift: f64, tol: f64) -> CliResult<Solved> {
    let (data, h, dx) = sp.resolvent_data(spec)?;
    let h = GridFunction::new(h.grid, h.values.iter().map(|v| v - shift).collect())?;
    let sol = solve_resolvent(sp.resolvent_model()?, spec.lambda, &h, tol)?;
    Ok(Solved { data, h, sol, dx })
}

#[derive(Serialize)]
struct GridMeta {
    lo: f64,
    hi: f64,
    n: usize,
    dx: f64,
}

#[derive(Serialize)]
struct RolloutRow {
    x: f64,
    f: f64,
    rollout: f64,
    lower: f64,
    upper: f64,
    warnings: usize,
}

#[derive(Serialize)]
struct ResolventMeta {
    space: String,
    data: String,
    lambda: f64,
    residual: f64,
    tol: f64,
    iterations: usize,
    grid: GridMeta,
    sup_h: f64,
    sup_f: f64,
    rollout: Vec<RolloutRow>,
}

fn grid_meta(s: &Solved) -> GridMeta {
    let g = &s.sol.f.grid;
    GridMeta { lo: g[0].x(), hi: g[g.len() - 1].x(), n: g.len(), dx: s.dx }
}

pub fn run_resolvent(p: &ResolventParams, sp: &BuiltSpace, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let s = solve(sp, &p.resolvent, 0.0, p.resolvent.tol)?;
    let (f, pol) = (&s.sol.f, &s.sol.policy);
    let rows = f.grid.iter().zip(&f.values).zip(&pol.values).map(|((x, v), u)| vec![num(x.x()), num(*v), num(*u)]);
    out.csv("resolvent.csv", &["x", "f", "policy"], rows)?;

    let mut checks = vec![
        Assertion::at_most("residual", s.sol.residual, p.resolvent.tol),
        Assertion::at_most("maximum_principle_excess", f.sup_norm() - s.h.sup_norm(), 1e-9),
    ];

    let mut rollout = Vec::new();
    if let Some(r) = &p.rollout {
        let grid = grid_meta(&s);
        let mut cfg = RolloutConfig::new(linspace(r.controls.lo, r.controls.hi, r.controls.n), r.dt, r.horizon, (grid.lo, grid.hi));
        if let Some(n) = r.n_chart {
            cfg.n_chart = n;
        }
        if let Some(k) = r.substeps {
            cfg.substeps = k;
        }
        cfg.validate().map_err(|e| CliError::config(format!("experiment.rollout: {e}")))?;
        let nodes: Vec<usize> = r
            .nodes
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                if !(grid.lo..=grid.hi).contains(&x) {
                    return Err(CliError::config(format!("experiment.rollout.nodes[{k}] = {x} lies outside the grid [{}, {}]", grid.lo, grid.hi)));
                }
                Ok(((x - grid.lo) / grid.dx).round() as usize)
            })
            .collect::<CliResult<_>>()?;
        let data = s.data;
        let h = move |q: &StatePoint| data.eval(q);
        rollout = nodes
            .par_iter()
            .map(|&i| -> CliResult<RolloutRow> {
                let res = value_by_rollout(sp.space(), p.resolvent.lambda, &h, &f.grid[i], &cfg)?;
                let fv = f.values[i];
                Ok(RolloutRow {
                    x: f.grid[i].x(),
                    f: fv,
                    rollout: res.value,
                    lower: fv - r.window_dt_factor * r.dt - r.window_dx_factor * s.dx,
                    upper: fv + r.upper_dx_factor * s.dx,
                    warnings: res.warnings,
                })
            })
            .collect::<CliResult<_>>()?;
        let below = rollout.iter().map(|w| w.lower - w.rollout).fold(f64::NEG_INFINITY, f64::max);
        let above = rollout.iter().map(|w| w.rollout - w.upper).fold(f64::NEG_INFINITY, f64::max);
        checks.push(Assertion::at_most("rollout_below_window", below, 0.0));
        checks.push(Assertion::at_most("rollout_above_window", above, 0.0));
        let rows = rollout.iter().map(|w| vec![num(w.x), num(w.f), num(w.rollout), num(w.lower), num(w.upper), w.warnings.to_string()]);
        out.csv("rollout.csv", &["x", "f", "rollout", "lower", "upper", "warnings"], rows)?;
    }

    let meta = ResolventMeta {
        space: describe(sp.space()),
        data: s.data.name(),
        lambda: p.resolvent.lambda,
        residual: s.sol.residual,
        tol: p.resolvent.tol,
        iterations: s.sol.iterations,
        grid: grid_meta(&s),
        sup_h: s.h.sup_norm(),
        sup_f: f.sup_norm(),
        rollout,
    };
    out.json("resolvent.json", &meta)?;
    Ok(checks)
}

#[derive(Serialize)]
struct TestFunctionMeta {
    a: f64,
    b: f64,
    first_anchor: StatePoint,
    second_anchor: StatePoint,
}

#[derive(Serialize)]
struct ViscosityOut {
    space: String,
    data: String,
    lambda: f64,
    residual: f64,
    solution_shift: f64,
    grid: GridMeta,
    tol: f64,
    test_functions: Vec<TestFunctionMeta>,
    subsolution: ViscosityReport,
    supersolution: ViscosityReport,
}

pub fn run_viscosity(p: &ViscosityParams, sp: &BuiltSpace, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let space = sp.space();
    let s = solve(sp, &p.resolvent, 0.0, p.resolvent.tol)?;
    let u = GridFunction::new(s.sol.f.grid.clone(), s.sol.f.values.iter().map(|v| v + p.solution_shift).collect())?;
    let anchors: Vec<StatePoint> = u
        .grid
        .iter()
        .step_by(p.anchor_stride)
        .filter(|q| p.anchor_range.map_or(true, |[lo, hi]| (lo..=hi).contains(&q.x())))
        .cloned()
        .collect();
    if anchors.is_empty() {
        return Err(CliError::config("experiment.anchor_range and experiment.anchor_stride leave no anchor nodes"));
    }

    let (mut ups, mut lows, mut meta) = (Vec::new(), Vec::new(), Vec::new());
    for &a in &p.a_values {
        for &b in &p.b_values {
            for k in 0..p.per_pair {
                let first = anchors[(k * 3) % anchors.len()].clone();
                let second = anchors[(k * 7 + 2) % anchors.len()].clone();
                ups.push(UpperTestFunction::new(space, a, b, 0.0, second.clone(), first.clone())?);
                lows.push(LowerTestFunction::new(space, a, b, 0.0, first.clone(), second.clone())?);
                meta.push(TestFunctionMeta { a, b, first_anchor: first, second_anchor: second });
            }
        }
    }
    let tol = p.tol_factor * s.dx;
    let lambda = p.resolvent.lambda;
    let relabel = |mut r: ViscosityReport, k: usize| {
        for rec in &mut r.records {
            rec.test_function = k;
        }
        r
    };
    let subs: Vec<ViscosityReport> = ups
        .par_iter()
        .enumerate()
        .map(|(k, tf)| verify_subsolution(space, &u, std::slice::from_ref(tf), lambda, &s.h, tol, p.flow_dt).map(|r| relabel(r, k)))
        .collect::<evikit_core::Result<_>>()?;
    let sups: Vec<ViscosityReport> = lows
        .par_iter()
        .enumerate()
        .map(|(k, tf)| verify_supersolution(space, &u, std::slice::from_ref(tf), lambda, &s.h, tol, p.flow_dt).map(|r| relabel(r, k)))
        .collect::<evikit_core::Result<_>>()?;
    let merge = |parts: Vec<ViscosityReport>| {
        let records: Vec<ViscosityRecord> = parts.into_iter().flat_map(|r| r.records).collect();
        ViscosityReport { pass: records.iter().all(|r| r.pass), tol, records }
    };
    let (sub, sup) = (merge(subs), merge(sups));

    let mut rows = Vec::new();
    for (side, rep) in [("sub", &sub), ("super", &sup)] {
        for r in &rep.records {
            let m = &meta[r.test_function];
            rows.push(vec![side.to_string(), r.test_function.to_string(), num(m.a), num(m.b), r.node.to_string(), num(r.point.x()), num(r.value.to_f64()), r.pass.to_string()]);
        }
    }
    out.csv("viscosity.csv", &["side", "test_function", "a", "b", "node", "x", "value", "pass"], rows)?;
    let checks = vec![
        Assertion::at_most("subsolution_failures", sub.failures() as f64, 0.0),
        Assertion::at_most("supersolution_failures", sup.failures() as f64, 0.0),
    ];
    let report = ViscosityOut {
        space: describe(space),
        data: s.data.name(),
        lambda,
        residual: s.sol.residual,
        solution_shift: p.solution_shift,
        grid: grid_meta(&s),
        tol,
        test_functions: meta,
        subsolution: sub,
        supersolution: sup,
    };
    out.json("viscosity_report.json", &report)?;
    Ok(checks)
}

#[derive(Serialize)]
struct ComparisonRow {
    delta: f64,
    #[serde(flatten)]
    report: ComparisonReport,
}

#[derive(Serialize)]
struct ComparisonOut {
    space: String,
    data: String,
    lambda: f64,
    grid: GridMeta,
    tol: f64,
    identical_max_abs_diff: Option<f64>,
    shifted: Vec<ComparisonRow>,
}

pub fn run_comparison(p: &ComparisonParams, sp: &BuiltSpace, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let spec = &p.resolvent;
    let base = solve(sp, spec, 0.0, spec.tol)?;
    let tol = p.tol_factor * base.dx;
    let mut checks = Vec::new();

    let identical = match p.identical_tol {
        Some(t) => {
            let again = solve(sp, spec, 0.0, t)?;
            let diff = base.sol.f.values.iter().zip(&again.sol.f.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            checks.push(Assertion::at_most("identical_data_max_abs_diff", diff, tol));
            Some(diff)
        }
        None => None,
    };

    let shifted: Vec<ComparisonRow> = p
        .deltas
        .par_iter()
        .map(|&delta| -> CliResult<ComparisonRow> {
            let v = solve(sp, spec, delta, spec.tol)?;
            let report = check_comparison(&base.sol.f, &v.sol.f, &base.h, &v.h, tol)?;
            Ok(ComparisonRow { delta, report })
        })
        .collect::<CliResult<_>>()?;
    for (i, r) in shifted.iter().enumerate() {
        checks.push(Assertion::at_most(format!("deltas[{i}].lhs"), r.report.lhs, r.delta + tol));
        checks.push(Assertion::holds(format!("deltas[{i}].comparison"), r.report.pass));
    }
    let rows = shifted.iter().map(|r| vec![num(r.delta), num(r.report.lhs), num(r.report.rhs), num(r.report.tol), r.report.pass.to_string()]);
    out.csv("comparison.csv", &["delta", "lhs", "rhs", "tol", "pass"], rows)?;
    let report = ComparisonOut { space: describe(sp.space()), data: base.data.name(), lambda: spec.lambda, grid: grid_meta(&base), tol, identical_max_abs_diff: identical, shifted };
    out.json("comparison_report.json", &report)?;
    Ok(checks)
}
