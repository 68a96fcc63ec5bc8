use evikit_core::flow::flow_point;
use evikit_core::space::{sample_pairs, sample_triples};
use evikit_core::spaces::*;
use evikit_core::tataru::*;
use evikit_core::{Space, StatePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 1e-3;

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

/// `inf_t t + e^{min(0,k) t} d(pi, rho(t))` by a dense scan over `[0, t_max]`.
fn scan_oracle(space: &dyn Space, pi: &StatePoint, rho: &StatePoint, t_max: f64, n: usize) -> (f64, f64) {
    let kh = space.kappa().min(0.0);
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=n {
        let t = t_max * k as f64 / n as f64;
        let r = flow_point(space, rho, t, DT).unwrap();
        let v = t + (kh * t).exp() * space.distance(pi, &r).unwrap();
        if v < best.1 {
            best = (t, v);
        }
    }
    best
}

#[test]
fn identical_points() {
    let r = tataru_distance(&ou(1.0), &s(0.3), &s(0.3), DT).unwrap();
    assert_eq!((r.value, r.t_star), (0.0, 0.0));
}

#[test]
fn ou_interior_minimum() {
    let e = 1f64.exp();
    let r = tataru_distance(&ou(1.0), &s(0.0), &s(e), DT).unwrap();
    assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    assert!((r.t_star - 1.0).abs() < 1e-4, "{}", r.t_star);
    let (t, v) = scan_oracle(&ou(1.0), &s(0.0), &s(e), e, 200_000);
    assert!((v - r.value).abs() < 1e-8 && (t - r.t_star).abs() < 1e-3);
}

#[test]
fn ou_boundary_minimum() {
    let r = tataru_distance(&ou(1.0), &s(0.0), &s(0.5), DT).unwrap();
    assert!((r.value - 0.5).abs() < 1e-12);
    assert_eq!(r.t_star, 0.0);
    let (t, v) = scan_oracle(&ou(1.0), &s(0.0), &s(0.5), 0.5, 10_000);
    assert_eq!(t, 0.0);
    assert!((v - 0.5).abs() < 1e-12);
}

#[test]
fn result_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for sp in [&ou(1.0) as &dyn Space, &cir(1.0), &ou(-0.5)] {
        for (pi, rho) in sample_pairs(sp, &mut rng, 200) {
            let d = sp.distance(&pi, &rho).unwrap();
            let r = tataru_distance(sp, &pi, &rho, DT).unwrap();
            assert!(r.value >= 0.0 && r.value <= d + 1e-12, "{} {} {}", sp.id(), r.value, d);
            let at = flow_point(sp, &rho, r.t_star, DT).unwrap();
            let phi = r.t_star + (sp.kappa().min(0.0) * r.t_star).exp() * sp.distance(&pi, &at).unwrap();
            assert!((phi - r.value).abs() < 1e-6, "{} phi {phi} value {}", sp.id(), r.value);
        }
    }
}

#[test]
fn distance_to_own_flow_is_at_most_elapsed_time() {
    for (sp, rho) in [(&ou(1.0) as &dyn Space, s(2.0)), (&cir(1.0), s(4.0)), (&ou(-0.5), s(0.7))] {
        for sv in [0.01, 0.1, 0.5, 1.3] {
            let moved = flow_point(sp, &rho, sv, DT).unwrap();
            let v = tataru_distance(sp, &moved, &rho, DT).unwrap().value;
            assert!(v <= sv + DT, "{} s = {sv}: {v}", sp.id());
        }
    }
}

#[test]
fn wider_bracket_never_improves() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for sp in [&ou(1.0) as &dyn Space, &cir(1.0), &ou(-0.5)] {
        for (pi, rho) in sample_pairs(sp, &mut rng, 100) {
            let d = sp.distance(&pi, &rho).unwrap();
            let k = TataruKernel::new(sp, &rho, DT, 1.5 * d).unwrap();
            let a = k.value(&pi).unwrap().value;
            let b = k.value_with_bracket(&pi, 1.5).unwrap().value;
            assert!(b >= a - 1e-12, "{}: {b} < {a}", sp.id());
        }
    }
}

#[test]
fn not_symmetric_in_general() {
    let sp = ou(1.0);
    let a = tataru_distance(&sp, &s(0.0), &s(1f64.exp()), DT).unwrap().value;
    let b = tataru_distance(&sp, &s(1f64.exp()), &s(0.0), DT).unwrap().value;
    assert!((a - b).abs() > 0.5);
}

fn quadruples(sp: &dyn Space, rng: &mut ChaCha8Rng, n: usize, jitter: f64) -> Vec<[StatePoint; 4]> {
    sample_pairs(sp, rng, n)
        .into_iter()
        .map(|(mu, nu)| {
            let mut near = |p: &StatePoint| {
                let mut y = sp.to_chart(p);
                y[0] += rng.gen_range(-jitter..jitter);
                sp.project_chart(&mut y);
                sp.from_chart(&y)
            };
            let (mh, nh) = (near(&mu), near(&nu));
            [mu, nu, mh, nh]
        })
        .collect()
}

#[test]
fn lipschitz_in_both_arguments() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let sp = ou(1.0);
    let qs = quadruples(&sp, &mut rng, 1000, 1.0);
    assert!(verify_tataru_lipschitz(&sp, &qs, DT).unwrap() <= 1e-4);
    let same: Vec<[StatePoint; 4]> = qs.iter().take(10).map(|[a, b, _, _]| [a.clone(), b.clone(), a.clone(), b.clone()]).collect();
    assert!(verify_tataru_lipschitz(&sp, &same, DT).unwrap() <= 0.0);
    let sp = cir(1.0);
    let qs = quadruples(&sp, &mut rng, 300, 0.5);
    assert!(verify_tataru_lipschitz(&sp, &qs, DT).unwrap() <= 1e-4);
}

#[test]
fn flow_lipschitz() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let r = [1e-2, 1e-3];
    let sp = ou(1.0);
    assert!(verify_tataru_flow_lipschitz(&sp, &[(s(0.0), s(1.5))], &r, 1e-4).unwrap() <= -1.0 + 1e-12);
    let pairs = sample_pairs(&sp, &mut rng, 100);
    assert!(verify_tataru_flow_lipschitz(&sp, &pairs, &r, 1e-4).unwrap() <= 1e-3);
    let sp = cir(1.0);
    let pairs = sample_pairs(&sp, &mut rng, 100);
    assert!(verify_tataru_flow_lipschitz(&sp, &pairs, &r, 1e-4).unwrap() <= 1e-3);
}

#[test]
fn triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let sp = ou(1.0);
    let triples = sample_triples(&sp, &mut rng, 1000);
    assert!(verify_tataru_triangle(&sp, &triples, DT).unwrap() <= 1e-4);
    let collapsed: Vec<[StatePoint; 3]> = triples.iter().take(20).map(|[a, _, c]| [a.clone(), a.clone(), c.clone()]).collect();
    assert!(verify_tataru_triangle(&sp, &collapsed, DT).unwrap().abs() <= 1e-12);
    let sp = cir(1.0);
    assert!(verify_tataru_triangle(&sp, &sample_triples(&sp, &mut rng, 300), DT).unwrap() <= 1e-4);

    let sp = heat(100);
    let g: Vec<[StatePoint; 3]> = (0..30)
        .map(|_| {
            let mut one = || sp.gaussian(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0));
            [one(), one(), one()]
        })
        .collect();
    assert!(verify_tataru_triangle(&sp, &g, 1e-2).unwrap() <= 1e-2);
}
