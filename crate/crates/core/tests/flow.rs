use evikit_core::flow::*;
use evikit_core::space::{sample_pairs, verify_kappa_convexity};
use evikit_core::spaces::*;
use evikit_core::{Error, ExtReal, Space, StatePoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cir(mu: f64) -> CirSpace {
    make_cir(CirDescriptor::new(mu)).unwrap()
}

fn ou(kappa: f64) -> QuadraticSpace {
    make_quadratic(QuadraticDescriptor::ou(kappa)).unwrap()
}

fn heat(m: usize) -> Wasserstein1DSpace {
    make_wasserstein1d(Wasserstein1DDescriptor { m, internal: Integrand::Entropy, potential: Potential::Zero, interaction: Potential::Zero }).unwrap()
}

fn s(x: f64) -> StatePoint {
    StatePoint::scalar(x)
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Quantiles at levels `(i - 1/2)/m` of `N(0,1)` convolved with the heat kernel at time `t`,
/// by direct quadrature of the convolution on a density grid and inversion of its CDF.
fn heat_kernel_quantiles(m: usize, t: f64) -> Vec<f64> {
    let (lo, hi, n) = (-14.0f64, 14.0f64, 5601usize);
    let h = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let gauss = |x: f64, var: f64| (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let rho0: Vec<f64> = xs.iter().map(|&x| gauss(x, 1.0)).collect();
    let rho: Vec<f64> = xs.iter().map(|&x| xs.iter().zip(&rho0).map(|(&y, &r)| r * gauss(x - y, 2.0 * t)).sum::<f64>() * h).collect();
    let mut cdf = vec![0.0; n];
    for i in 1..n {
        cdf[i] = cdf[i - 1] + 0.5 * h * (rho[i] + rho[i - 1]);
    }
    let total = cdf[n - 1];
    (1..=m)
        .map(|i| {
            let p = (i as f64 - 0.5) / m as f64 * total;
            let k = cdf.partition_point(|&c| c < p).clamp(1, n - 1);
            let w = (p - cdf[k - 1]) / (cdf[k] - cdf[k - 1]);
            xs[k - 1] + w * h
        })
        .collect()
}

#[test]
fn exact_flow_examples() {
    let t = 2f64.ln();
    let tr = flow_exact(&ou(1.0), &s(1.0), t, t / 4.0).unwrap();
    assert!((tr.end().x() - 0.5).abs() < 1e-14);
    assert_eq!(tr.len(), 5);
    let tr = flow_exact(&cir(1.0), &s(3.0), t, 1e-2).unwrap();
    assert!((tr.end().x() - 2.0).abs() < 1e-12);
    assert!((tr.times.last().unwrap() - t).abs() < 1e-15);
}

#[test]
fn exact_heat_flow_matches_heat_kernel() {
    let sp = heat(200);
    let tr = flow_exact(&sp, &sp.gaussian(0.0, 1.0), 1.5, 0.5).unwrap();
    let want = heat_kernel_quantiles(200, 1.5);
    let err = rms(tr.end().coords(), &want);
    assert!(err < 1e-3, "rms quantile error {err}");
    let n4 = sp.gaussian(0.0, 2.0);
    assert!(rms(tr.end().coords(), n4.coords()) < 1e-12);
}

#[test]
fn exact_flow_unsupported_without_closed_form() {
    let sp = make_allen_cahn(AllenCahnDescriptor { n_grid: 8, length: 1.0, kappa: 1.0, potential: Potential::Zero }).unwrap();
    let p = StatePoint::new(vec![0.1; 8]).unwrap();
    assert!(matches!(flow_exact(&sp, &p, 1.0, 0.1), Err(Error::Unsupported(_))));
}

#[test]
fn config_errors() {
    assert!(matches!(flow_mms(&ou(1.0), &s(1.0), &FlowConfig::new(0.0, 1.0)), Err(Error::Usage(_))));
    assert!(matches!(flow_mms(&ou(1.0), &s(1.0), &FlowConfig::new(2.0, 1.0)), Err(Error::Usage(_))));
    assert!(matches!(flow_exact(&cir(1.0), &s(-1.0), 1.0, 0.1), Err(Error::Domain(_))));
}

#[test]
fn mms_ou_endpoint() {
    let tr = flow_mms(&ou(1.0), &s(1.0), &FlowConfig::new(1e-3, 1.0)).unwrap();
    assert_eq!(tr.len(), 1001);
    assert!((tr.end().x() - (-1.0f64).exp()).abs() < 1e-3);
}

#[test]
fn mms_at_minimizer_is_constant() {
    let tr = flow_mms(&ou(1.0), &s(0.0), &FlowConfig::new(1e-2, 1.0)).unwrap();
    assert!(tr.states.iter().all(|p| p.x().abs() < 1e-12));
    let tr = flow_mms(&cir(2.0), &s(2.0), &FlowConfig::new(1e-2, 1.0)).unwrap();
    assert!(tr.states.iter().all(|p| (p.x() - 2.0).abs() < 1e-8));
}

#[test]
fn mms_heat_flow() {
    let sp = heat(200);
    let tr = flow_mms(&sp, &sp.gaussian(0.0, 1.0), &FlowConfig::new(1e-3, 0.5)).unwrap();
    let target = heat_kernel_quantiles(200, 0.5);
    let w2 = rms(tr.end().coords(), &target);
    assert!(w2 <= 5e-3, "W2 = {w2}");
}

#[test]
fn mms_first_order_convergence() {
    let sp = ou(1.0);
    let exact = (-1.0f64).exp();
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| (flow_mms(&sp, &s(1.0), &FlowConfig::new(dt, 1.0)).unwrap().end().x() - exact).abs()).collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((1.7..=2.3).contains(&r), "ratio {r}");
    }
}

#[test]
fn evi_ou_equality() {
    let dt = 1e-3;
    let tr = flow_exact(&ou(1.0), &s(2.0), 2.0, dt).unwrap();
    let probes: Vec<StatePoint> = [-1.5, -0.3, 0.0, 0.7, 2.5].iter().map(|&x| s(x)).collect();
    let rep = verify_evi(&ou(1.0), &tr, &probes).unwrap();
    assert_eq!(rep.probe_count, 5);
    assert!(rep.max_violation.abs() <= 10.0 * dt, "{}", rep.max_violation);
    let want = rep.per_probe.iter().map(|r| r.lhs - r.rhs).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(rep.max_violation, want);
}

#[test]
fn evi_stationary_probe() {
    let tr = flow_exact(&ou(1.0), &s(0.0), 1.0, 1e-2).unwrap();
    let rep = verify_evi(&ou(1.0), &tr, &[s(0.0)]).unwrap();
    assert!(rep.max_violation.abs() < 1e-15);
}

#[test]
fn evi_cir() {
    let dt = 1e-3;
    let sp = cir(1.0);
    let tr = flow_exact(&sp, &s(3.0), 3.0, dt).unwrap();
    let rep = verify_evi(&sp, &tr, &[s(0.5), s(1.0), s(2.0)]).unwrap();
    assert!(rep.max_violation <= 10.0 * dt, "{}", rep.max_violation);
    let tr = flow_mms(&sp, &s(3.0), &FlowConfig::new(dt, 1.0)).unwrap();
    let rep = verify_evi(&sp, &tr, &[s(0.5), s(1.0), s(2.0)]).unwrap();
    assert!(rep.max_violation <= 10.0 * dt, "mms {}", rep.max_violation);
}

#[test]
fn contraction_examples() {
    assert!(verify_contraction(&ou(1.0), &s(2.0), &s(-1.0), 3.0, 1e-2).unwrap().abs() < 1e-9);
    assert_eq!(verify_contraction(&cir(1.0), &s(2.0), &s(2.0), 1.0, 1e-2).unwrap(), 0.0);
    let sp = heat(200);
    let v = verify_contraction(&sp, &sp.gaussian(0.0, 1.0), &sp.gaussian(0.0, 2.0), 2.0, 1e-2).unwrap();
    assert!(v <= 1e-3, "{v}");
    let v = verify_contraction(&cir(1.0), &s(0.2), &s(5.0), 3.0, 1e-2).unwrap();
    assert!(v <= 1e-12, "{v}");
}

#[test]
fn energy_identity_ou() {
    let dt = 1e-3;
    let sp = ou(1.0);
    let tr = flow_exact(&sp, &s(2.0), 1.0, dt).unwrap();
    let drop = sp.energy(tr.start()).to_f64() - sp.energy(tr.end()).to_f64();
    assert!((drop - 2.0 * (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    let r = verify_energy_identity(&sp, &tr).unwrap().to_f64();
    assert!(r <= 10.0 * dt, "{r}");
    let tr = flow_exact(&sp, &s(0.0), 1.0, dt).unwrap();
    assert_eq!(verify_energy_identity(&sp, &tr).unwrap(), ExtReal::Finite(0.0));
}

#[test]
fn energy_identity_heat() {
    let sp = heat(400);
    let tr = flow_exact(&sp, &sp.gaussian(0.0, 1.0), 1.0, 1e-2).unwrap();
    let r = verify_energy_identity(&sp, &tr).unwrap().to_f64();
    assert!(r <= 1e-2, "{r}");
    // entropy drop of the Gaussian family: log sigma(1) - log sigma(0) = log(3)/2
    let integral: f64 = {
        let n = 100_000;
        let h = 1.0 / n as f64;
        (0..n).map(|k| h / (1.0 + 2.0 * (k as f64 + 0.5) * h)).sum()
    };
    assert!((integral - 0.5 * 3f64.ln()).abs() < 1e-9);
}

#[test]
fn energy_identity_needs_finite_start() {
    let sp = cir(1.0);
    let tr = Trajectory { space_id: "cir".into(), times: vec![0.0, 1.0], states: vec![s(0.0), s(1.0)] };
    assert!(matches!(verify_energy_identity(&sp, &tr), Err(Error::Usage(_))));
}

#[test]
fn quadratic_lower_bound_examples() {
    let (c2, m) = fit_quadratic_lower_bound(&ou(1.0), &s(0.0), 1.0, 200).unwrap();
    assert!(c2.abs() < 1e-12 && m.abs() < 1e-12);
    let (c2, _) = fit_quadratic_lower_bound(&ou(-1.0), &s(0.0), 2.0, 200).unwrap();
    assert!(c2.abs() < 1e-12);
    assert!(matches!(fit_quadratic_lower_bound(&ou(-1.0), &s(0.0), 0.5, 200), Err(Error::Usage(_))));

    let sp = cir(1.0);
    let (c2, _) = fit_quadratic_lower_bound(&sp, &s(1.0), 0.5, 200).unwrap();
    let d = sp.descriptor();
    let n = 2_000_000;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let x = d.x_lo + (d.x_hi - d.x_lo) * i as f64 / n as f64;
        let dist = 2.0 * (x.sqrt() - 1.0);
        best = best.min(sp.energy_x(x).to_f64() + 0.25 * dist * dist);
    }
    // the grid minimum overestimates the infimum by at most O(spacing^2)
    assert!((c2 + best).abs() < 1e-6, "c2 = {c2}, grid = {}", -best);
}

#[test]
fn semigroup_exact() {
    for (sp, p) in [(&ou(1.3) as &dyn Space, s(1.7)), (&cir(1.0) as &dyn Space, s(4.0))] {
        let a = flow_point(sp, &flow_point(sp, &p, 0.7, 1e-2).unwrap(), 0.7, 1e-2).unwrap();
        let b = flow_point(sp, &p, 1.4, 1e-2).unwrap();
        assert!(sp.distance(&a, &b).unwrap() < 1e-12);
    }
}

#[test]
fn semigroup_mms() {
    let sp = make_quadratic(QuadraticDescriptor { dimension: 2, kappa: 0.5, perturbation: Potential::Quartic { c: 1.0 } }).unwrap();
    let p = StatePoint::new(vec![1.0, -0.6]).unwrap();
    let cfg = FlowConfig::new(1e-2, 0.5);
    let half = flow_mms(&sp, &p, &cfg).unwrap();
    let a = flow_mms(&sp, half.end(), &cfg).unwrap();
    let b = flow_mms(&sp, &p, &FlowConfig::new(1e-2, 1.0)).unwrap();
    assert!(sp.distance(a.end(), b.end()).unwrap() < 1e-8);
}

#[test]
fn energy_monotone_along_trajectories() {
    let sp = cir(1.0);
    let tr = flow_mms(&sp, &s(6.0), &FlowConfig::new(1e-2, 2.0)).unwrap();
    let e: Vec<f64> = tr.states.iter().map(|p| sp.energy(p).to_f64()).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let sp = heat(100);
    let tr = flow_mms(&sp, &sp.gaussian(0.5, 0.5), &FlowConfig::new(1e-2, 0.5)).unwrap();
    let e: Vec<f64> = tr.states.iter().map(|p| sp.energy(p).to_f64()).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn evi_kappa_matches_convexity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for sp in [&ou(1.0) as &dyn Space, &cir(1.0), &heat(50)] {
        let pairs = sample_pairs(sp, &mut rng, 200);
        assert!(verify_kappa_convexity(sp, &pairs).unwrap() <= 1e-9, "{}", sp.id());
    }
}
