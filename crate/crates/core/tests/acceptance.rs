//! Acceptance suite: one pass/fail line per criterion, each with a runtime budget.

use std::process::ExitCode;
use std::time::Instant;

use evikit_core::ekeland::*;
use evikit_core::flow::*;
use evikit_core::hj::*;
use evikit_core::math::linspace;
use evikit_core::space::{sample_pairs, sample_triples};
use evikit_core::spaces::*;
use evikit_core::tataru::*;
use evikit_core::{Space, StatePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn ok<T>(r: evikit_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn s(x: f64) -> StatePoint {
    StatePoint::scalar(x)
}

fn ou() -> QuadraticSpace {
    make_quadratic(QuadraticDescriptor::ou(1.0)).unwrap()
}

fn cir() -> CirSpace {
    make_cir(CirDescriptor::new(1.0)).unwrap()
}

fn heat(m: usize) -> Wasserstein1DSpace {
    make_wasserstein1d(Wasserstein1DDescriptor { m, internal: Integrand::Entropy, potential: Potential::Zero, interaction: Potential::Zero }).unwrap()
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

fn evi_ou() -> Outcome {
    let sp = ou();
    let dt = 1e-3;
    let tr = ok(flow_exact(&sp, &s(1.5), 2.0, dt))?;
    let probes: Vec<StatePoint> = linspace(-2.0, 2.0, 20).into_iter().map(s).collect();
    let rep = ok(verify_evi(&sp, &tr, &probes))?;
    Ok((rep.probe_count == 20 && rep.max_violation <= 1e-2, format!("max_violation {:.3e} over {} probes", rep.max_violation, rep.probe_count)))
}

fn contraction() -> Outcome {
    let v_ou = ok(verify_contraction(&ou(), &s(2.0), &s(-0.5), 5.0, 1e-2))?;
    let sp = heat(400);
    let v_w = ok(verify_contraction(&sp, &sp.gaussian(0.0, 1.0), &sp.gaussian(0.0, 2.0), 2.0, 1e-2))?;
    Ok((v_ou.abs() <= 1e-9 && v_w <= 1e-3, format!("OU deviation {v_ou:.2e}, heat-flow violation {v_w:.2e}")))
}

fn energy_identity() -> Outcome {
    let sp = ou();
    let tr = ok(flow_exact(&sp, &s(2.0), 1.0, 1e-3))?;
    let r_ou = ok(verify_energy_identity(&sp, &tr))?.to_f64();

    let (sigma0, t) = (1.0f64, 1.0f64);
    let sp = heat(400);
    let tr = ok(flow_exact(&sp, &sp.gaussian(0.0, sigma0), t, 1e-2))?;
    let r_w = ok(verify_energy_identity(&sp, &tr))?.to_f64();
    let closed = 0.5 * (1.0 + 2.0 * t / (sigma0 * sigma0)).ln();
    let drop = sp.energy(tr.start()).to_f64() - sp.energy(tr.end()).to_f64();
    let info: Vec<f64> = tr.states.iter().map(|p| sp.information(p).to_f64()).collect();
    let integral: f64 = tr.times.windows(2).zip(info.windows(2)).map(|(t, i)| 0.5 * (i[0] + i[1]) * (t[1] - t[0])).sum();
    let pass = r_ou <= 1e-2 && r_w <= 1e-2 && (drop - closed).abs() <= 1e-2 && (integral - closed).abs() <= 1e-2;
    Ok((pass, format!("OU residual {r_ou:.2e}; heat residual {r_w:.2e}, drop {drop:.5} and int I {integral:.5} vs {closed:.5}")))
}

fn quadruples(sp: &dyn Space, rng: &mut ChaCha8Rng, n: usize) -> Vec<[StatePoint; 4]> {
    sample_pairs(sp, rng, n)
        .into_iter()
        .map(|(mu, nu)| {
            let mut near = |p: &StatePoint| {
                let mut y = sp.to_chart(p);
                y[0] += rng.gen_range(-0.5..0.5);
                sp.project_chart(&mut y);
                sp.from_chart(&y)
            };
            let (mh, nh) = (near(&mu), near(&nu));
            [mu, nu, mh, nh]
        })
        .collect()
}

fn tataru() -> Outcome {
    let dt = 1e-3;
    let r = ok(tataru_distance(&ou(), &s(0.0), &s(1f64.exp()), dt))?;
    let mut pass = (r.value - 2.0).abs() <= 1e-3 && (r.t_star - 1.0).abs() <= 1e-2;
    let mut detail = format!("d_T(0,e) = {:.6} at t* = {:.4}", r.value, r.t_star);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for sp in [&ou() as &dyn Space, &cir()] {
        let lip = ok(verify_tataru_lipschitz(sp, &quadruples(sp, &mut rng, 1000), dt))?;
        let flow = ok(verify_tataru_flow_lipschitz(sp, &sample_pairs(sp, &mut rng, 1000), &[1e-2, 1e-3], 1e-4))?;
        let tri = ok(verify_tataru_triangle(sp, &sample_triples(sp, &mut rng, 1000), dt))?;
        pass &= lip <= 1e-4 && flow <= 1e-4 && tri <= 1e-4;
        detail += &format!("; {}: lipschitz {lip:.1e}, flow {flow:.1e}, triangle {tri:.1e}", sp.id());
    }
    Ok((pass, detail))
}

/// Heat-flow quantiles of `N(0,1)` at time `t` by quadrature of the heat-kernel convolution.
fn heat_kernel_quantiles(m: usize, t: f64) -> Vec<f64> {
    let (lo, hi, n) = (-14.0f64, 14.0f64, 5601usize);
    let h = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let gauss = |x: f64, var: f64| (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let rho: Vec<f64> = xs.iter().map(|&x| xs.iter().map(|&y| gauss(y, 1.0) * gauss(x - y, 2.0 * t)).sum::<f64>() * h).collect();
    let mut cdf = vec![0.0; n];
    for i in 1..n {
        cdf[i] = cdf[i - 1] + 0.5 * h * (rho[i] + rho[i - 1]);
    }
    (1..=m)
        .map(|i| {
            let p = (i as f64 - 0.5) / m as f64 * cdf[n - 1];
            let k = cdf.partition_point(|&c| c < p).clamp(1, n - 1);
            xs[k - 1] + (p - cdf[k - 1]) / (cdf[k] - cdf[k - 1]) * h
        })
        .collect()
}

fn mms_convergence() -> Outcome {
    let exact = (-1.0f64).exp();
    let mut errs = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        errs.push((ok(flow_mms(&ou(), &s(1.0), &FlowConfig::new(dt, 1.0)))?.end().x() - exact).abs());
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let sp = heat(200);
    let tr = ok(flow_mms(&sp, &sp.gaussian(0.0, 1.0), &FlowConfig::new(1e-3, 0.5)))?;
    let w2 = rms(tr.end().coords(), &heat_kernel_quantiles(200, 0.5));
    let pass = ratios.iter().all(|r| (1.7..=2.3).contains(r)) && w2 <= 5e-3;
    Ok((pass, format!("OU error ratios {:.3}, {:.3}; JKO W2 to heat kernel {w2:.2e}", ratios[0], ratios[1])))
}

fn cir_desc() -> CirDescriptor {
    CirDescriptor { mu: 1.0, x_lo: 1e-3, x_hi: 8.0 }
}

fn cir_resolvent(shift: f64, tol: f64) -> Result<(GridFunction, ResolventSolution), String> {
    let desc = cir_desc();
    let h = ok(GridFunction::from_fn(cir_grid(&desc, 800), |p| p.x().min(2.0) - shift))?;
    let sol = ok(solve_resolvent_cir(&desc, 1.0, &h, 800, tol))?;
    Ok((h, sol))
}

fn resolvent_viscosity() -> Outcome {
    let desc = cir_desc();
    let sp = make_cir(desc).unwrap();
    let (h, sol) = cir_resolvent(0.0, 1e-6)?;
    let dx = (desc.x_hi - desc.x_lo) / 799.0;
    let pts: Vec<StatePoint> = sol.f.grid.iter().step_by(40).filter(|p| (0.25..=4.0).contains(&p.x())).cloned().collect();
    let (mut ups, mut lows) = (Vec::new(), Vec::new());
    for a in [0.5, 1.0, 2.0, 4.0] {
        for b in [1e-3, 1e-2, 1e-1] {
            for k in 0..5 {
                let rho = pts[(k * 3) % pts.len()].clone();
                let mu = pts[(k * 7 + 2) % pts.len()].clone();
                ups.push(ok(UpperTestFunction::new(&sp, a, b, 0.0, mu.clone(), rho.clone()))?);
                lows.push(ok(LowerTestFunction::new(&sp, a, b, 0.0, rho, mu))?);
            }
        }
    }
    let sub = ok(verify_subsolution(&sp, &sol.f, &ups, 1.0, &h, 10.0 * dx, 1e-2))?;
    let sup = ok(verify_supersolution(&sp, &sol.f, &lows, 1.0, &h, 10.0 * dx, 1e-2))?;

    let dt = 1e-2;
    let cfg = RolloutConfig::new(linspace(-4.0, 4.0, 81), dt, 25.0, (desc.x_lo, desc.x_hi));
    let (mut below, mut above) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for x in [0.2, 0.5, 1.0, 2.0, 4.0] {
        let i = ((x - desc.x_lo) / dx).round() as usize;
        let r = ok(value_by_rollout(&sp, 1.0, &|p: &StatePoint| p.x().min(2.0), &sol.f.grid[i], &cfg))?;
        below = below.max(sol.f.values[i] - 10.0 * dt - 5.0 * dx - r.value);
        above = above.max(r.value - sol.f.values[i]);
    }
    // the upper edge carries the O(dx) bias of the upwind solution (it sits below the true value)
    let pass = sol.residual <= 1e-6 && ups.len() >= 50 && sub.pass && sup.pass && below <= 0.0 && above <= dx;
    Ok((
        pass,
        format!(
            "residual {:.1e}; {} sub / {} super test functions, failures {} / {}; rollout excess over f {above:.1e} (dx = {dx:.1e}), margin below window {:.1e}",
            sol.residual,
            ups.len(),
            lows.len(),
            sub.failures(),
            sup.failures(),
            -below
        ),
    ))
}

fn comparison() -> Outcome {
    let dx = 8.0 / 799.0;
    let (h, u) = cir_resolvent(0.0, 1e-12)?;
    let (_, u2) = cir_resolvent(0.0, 1e-6)?;
    let same = ok(check_comparison(&u.f, &u2.f, &h, &h, 10.0 * dx))?;
    let same_rev = ok(check_comparison(&u2.f, &u.f, &h, &h, 10.0 * dx))?;
    let mut pass = same.pass && same_rev.pass && same.lhs.abs().max(same_rev.lhs.abs()) <= 10.0 * dx;
    let mut detail = format!("identical data max|u-v| {:.1e}", same.lhs.abs().max(same_rev.lhs.abs()));
    for delta in [0.05, 0.1, 0.5] {
        let (h_low, v) = cir_resolvent(delta, 1e-12)?;
        let r = ok(check_comparison(&u.f, &v.f, &h, &h_low, 10.0 * dx))?;
        pass &= r.pass && r.lhs <= delta + 10.0 * dx;
        detail += &format!("; delta {delta}: lhs {:.6}", r.lhs);
    }
    Ok((pass, detail))
}

fn sandwich() -> Outcome {
    let a = [0.5, 1.0, 2.0, 4.0];
    let ou_samples: Vec<StatePoint> = linspace(-2.0, 3.0, 101).into_iter().map(s).collect();
    let ou_refs: Vec<StatePoint> = [-1.0, 0.0, 1.0, 2.0].map(s).to_vec();
    let r_ou = ok(hamiltonian_sandwich_check(&ou(), &a, &ou_refs, &ou_samples))?;
    let cir_samples: Vec<StatePoint> = linspace(0.2, 5.0, 97).into_iter().map(s).collect();
    let cir_refs: Vec<StatePoint> = [0.3, 1.0, 2.0, 4.0].map(s).to_vec();
    let r_cir = ok(hamiltonian_sandwich_check(&cir(), &a, &cir_refs, &cir_samples))?;
    let pass = r_ou.max_violation() <= 1e-4 && r_cir.max_violation() <= 1e-4;
    Ok((pass, format!("OU {} checks, violation {:.1e}; CIR {} checks, violation {:.1e}", r_ou.checks, r_ou.max_violation(), r_cir.checks, r_cir.max_violation())))
}

fn ekeland_exactness() -> Outcome {
    let mut problems = 0;
    let mut pass = true;
    let mut check = |g: &[f64], b: &(dyn Fn(usize, usize) -> f64 + Sync), delta: f64, x_hat: usize, need_a: bool| -> Result<(), String> {
        let p = EkelandProblem { g, b, delta, x_hat };
        let r = ok(ekeland_optimize(&p))?;
        let rep = ok(verify_ekeland(&p, &r, 1e-9))?;
        pass &= rep.pass && (!need_a || rep.consequence_a.is_some());
        problems += 1;
        Ok(())
    };
    // line example
    let xs: Vec<f64> = (0..=100).map(|k| k as f64 / 10.0).collect();
    let g: Vec<f64> = xs.iter().map(|x| -(x - 3.14) * (x - 3.14)).collect();
    let line = |i: usize, j: usize| (xs[i] - xs[j]).abs();
    check(&g, &line, 0.1, 0, false)?;
    check(&vec![0.5; 101], &line, 0.1, 40, true)?;
    check(&g, &line, 1e4, 0, false)?;
    // 316 x 316 planar grid with a rough objective, started far away and near the top
    let n = 316;
    let pt = |i: usize| ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
    let g: Vec<f64> = (0..n * n).map(|i| {
        let (x, y) = pt(i);
        (7.0 * x).sin() * (5.0 * y).cos() - (x - 0.6).powi(2)
    }).collect();
    let plane = |i: usize, j: usize| {
        let (a, b) = (pt(i), pt(j));
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    };
    check(&g, &plane, 0.5, 0, false)?;
    let sup = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let near = (0..g.len()).filter(|&i| g[i] >= sup - 0.5 * 0.2 * 0.2).last().unwrap();
    check(&g, &plane, 0.2, near, true)?;
    // random small problems
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let m = rng.gen_range(5..80);
        let pts: Vec<(f64, f64)> = (0..m).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = |i: usize, j: usize| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
        let delta = rng.gen_range(0.05..2.0);
        let top = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let near: Vec<usize> = (0..m).filter(|&i| g[i] >= top - 0.5 * delta * delta).collect();
        check(&g, &b, delta, near[rng.gen_range(0..near.len())], true)?;
        check(&g, &b, delta, rng.gen_range(0..m), false)?;
    }
    Ok((pass, format!("{problems} finite problems (largest {} points) verified exhaustively", n * n)))
}

fn quadruplication() -> Outcome {
    let sp = ou();
    let grid = uniform_grid(-3.0, 3.0, 601);
    let h = ok(GridFunction::from_fn(grid.clone(), |p| p.x().clamp(-1.0, 1.0)))?;
    let h2 = ok(GridFunction::from_fn(grid, |p| p.x().clamp(-1.0, 1.0) - 0.1))?;
    let idx: Vec<usize> = (100..=500).step_by(10).collect();
    let u = ok(solve_resolvent(&sp, 1.0, &h, 1e-10))?.f.subset(&idx);
    let v = ok(solve_resolvent(&sp, 1.0, &h2, 1e-10))?.f.subset(&idx);
    let cfg = QuadrupleConfig { alphas: vec![10.0, 100.0, 1000.0], nu0: s(0.0), c1: 0.0, flow_dt: 1e-2, fit_samples: 200 };
    let out = ok(quadruplicate(&sp, &u, &v, &cfg))?;
    let reps: Vec<QuadrupleReport> = out.into_iter().map(|(_, r)| r).collect();
    let trend: Vec<f64> = reps.iter().map(|r| r.trend).collect();
    let k1: Vec<f64> = reps.iter().map(|r| r.key.key1_residual).collect();
    let k2: Vec<f64> = reps.iter().map(|r| r.key.key2_residual).collect();
    let pass = trend.windows(2).all(|w| w[1] <= w[0])
        && trend[2] <= 0.1 * trend[0]
        && residuals_shrink(&k1, 1.5)
        && residuals_shrink(&k2, 1.5)
        && reps.iter().all(|r| r.ekeland.pass);
    Ok((
        pass,
        format!(
            "{}^4 grid; trend {:.2e} -> {:.2e} -> {:.2e}; key1 {:.1e} -> {:.1e} -> {:.1e}; key2 {:.1e} -> {:.1e} -> {:.1e}; C = {:.3}",
            u.len(),
            trend[0],
            trend[1],
            trend[2],
            k1[0],
            k1[1],
            k1[2],
            k2[0],
            k2[1],
            k2[2],
            fitted_duplication_constant(&reps)
        ),
    ))
}

fn jensen() -> Outcome {
    let eps = [0.01, 0.1, 0.2, 0.3, 0.333];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let euclid = make_quadratic(QuadraticDescriptor { dimension: 3, kappa: 1.0, perturbation: Potential::Zero }).unwrap();
    let q: Vec<[StatePoint; 4]> = (0..10_000).map(|_| [(); 4].map(|_| euclid.sample_point(&mut rng))).collect();
    let v_e = ok(jensen_distance_check(&euclid, &q, &eps, &eps))?;
    let c = cir();
    let q: Vec<[StatePoint; 4]> = (0..1000).map(|_| [(); 4].map(|_| c.sample_point(&mut rng))).collect();
    let v_c = ok(jensen_distance_check(&c, &q, &eps, &eps))?;
    Ok((v_e <= 1e-9 && v_c <= 1e-9, format!("max violation Euclidean {v_e:.3e}, CIR {v_c:.3e}")))
}

fn mccann() -> Outcome {
    let entropy = ok(mccann_check(&|x| Integrand::Entropy.value(x), 1e6))?;
    let power = ok(mccann_check(&|x| Integrand::Power { exponent: 2.0, coefficient: 1.0 }.value(x), 1e6))?;
    let concave = ok(mccann_check(&|x: f64| -x * x, 1e6))?;
    let named = concave.violations.iter().any(|v| v.contains("convexity"));
    Ok((entropy.pass && power.pass && !concave.pass && named, format!("entropy {}, power:2 {}, concave fails on {:?}", entropy.pass, power.pass, concave.violations)))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 12] = [
        (1, "EVI on OU", 5.0, evi_ou),
        (2, "contraction", 10.0, contraction),
        (3, "energy identity", 10.0, energy_identity),
        (4, "Tataru distance", 60.0, tataru),
        (5, "MMS convergence", 120.0, mms_convergence),
        (6, "resolvent + viscosity", 300.0, resolvent_viscosity),
        (7, "comparison principle", 600.0, comparison),
        (8, "Hamiltonian sandwich", 30.0, sandwich),
        (9, "Ekeland exactness", 60.0, ekeland_exactness),
        (10, "quadruplication trend", 600.0, quadruplication),
        (11, "Jensen on distances", 10.0, jensen),
        (12, "McCann checks", 1.0, mccann),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p && secs < budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("criterion {id:>2} {} {name} ({secs:.2} s of {budget} s): {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
