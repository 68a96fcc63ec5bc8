//! The space contract and the generic property verifiers.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{usage, Result};
use crate::ext::ExtReal;
use crate::math;
use crate::point::StatePoint;

/// Per-space numerical tolerances used by the property verifiers.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Tolerances {
    pub metric: f64,
    pub geodesic: f64,
    pub convexity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { metric: 1e-9, geodesic: 1e-6, convexity: 1e-8 }
    }
}

/// A complete geodesic space with an energy and its EVI gradient flow.
///
/// Implementors provide an isometric chart: a map to a convex subset of R^n on
/// which the metric is Euclidean and geodesics are straight segments. All the
/// metric operations below are derived from it.
pub trait Space: Send + Sync {
    /// Short builtin name (`"cir"`, `"ou"`, ...).
    fn id(&self) -> &'static str;
    fn dimension(&self) -> usize;
    /// The EVI modulus.
    fn kappa(&self) -> f64;
    fn tolerances(&self) -> Tolerances {
        Tolerances::default()
    }
    /// Typical chart length, used for slope probing radii.
    fn scale(&self) -> f64 {
        1.0
    }

    /// Domain check beyond shape and finiteness.
    fn check_domain(&self, p: &StatePoint) -> Result<()>;
    fn to_chart(&self, p: &StatePoint) -> Vec<f64>;
    fn from_chart(&self, y: &[f64]) -> StatePoint;
    /// Nearest point of the closed chart image (and of any truncation).
    fn project_chart(&self, y: &mut [f64]);
    fn chart_energy(&self, y: &[f64]) -> ExtReal;
    /// Euclidean gradient of the chart energy; `None` off the effective domain.
    fn chart_gradient(&self, y: &[f64]) -> Option<Vec<f64>>;

    /// Closed-form flow `S[p](t)`, when one is registered for `p`'s family.
    fn exact_flow(&self, _p: &StatePoint, _t: f64) -> Option<StatePoint> {
        None
    }

    /// A random point of finite energy, for property sweeps.
    fn sample_point(&self, rng: &mut dyn RngCore) -> StatePoint;

    fn validate(&self, p: &StatePoint) -> Result<()> {
        if p.dim() != self.dimension() {
            return Err(usage(format!(
                "dimension mismatch: {} space has dimension {}, point has {}",
                self.id(),
                self.dimension(),
                p.dim()
            )));
        }
        self.check_domain(p)
    }

    fn distance(&self, p: &StatePoint, q: &StatePoint) -> Result<f64> {
        self.validate(p)?;
        self.validate(q)?;
        Ok(math::dist(&self.to_chart(p), &self.to_chart(q)))
    }

    fn geodesic_point(&self, p: &StatePoint, q: &StatePoint, t: f64) -> Result<StatePoint> {
        if !(0.0..=1.0).contains(&t) {
            return Err(usage(format!("geodesic parameter {t} outside [0,1]")));
        }
        self.validate(p)?;
        self.validate(q)?;
        if t == 0.0 || p == q {
            return Ok(p.clone());
        }
        if t == 1.0 {
            return Ok(q.clone());
        }
        Ok(self.from_chart(&math::lerp(&self.to_chart(p), &self.to_chart(q), t)))
    }

    /// `E(p)`, `+inf` off the effective domain (including malformed points).
    fn energy(&self, p: &StatePoint) -> ExtReal {
        if self.validate(p).is_err() {
            return ExtReal::PosInf;
        }
        self.chart_energy(&self.to_chart(p))
    }

    fn slope(&self, p: &StatePoint) -> ExtReal {
        if !self.energy(p).is_finite() {
            return ExtReal::PosInf;
        }
        match self.chart_gradient(&self.to_chart(p)) {
            Some(g) => ExtReal::from_f64(math::norm(&g)),
            None => ExtReal::PosInf,
        }
    }

    /// `I = |dE|^2`.
    fn information(&self, p: &StatePoint) -> ExtReal {
        match self.slope(p) {
            ExtReal::Finite(s) => ExtReal::from_f64(s * s),
            other => other,
        }
    }
}

pub type SpaceHandle = Arc<dyn Space>;

/// Worst violation of the metric axioms over sampled points.
#[derive(Clone, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MetricReport {
    pub symmetry: f64,
    pub identity: f64,
    pub triangle: f64,
    pub nonnegativity: f64,
}

impl MetricReport {
    pub fn worst(&self) -> f64 {
        self.symmetry.max(self.identity).max(self.triangle).max(self.nonnegativity)
    }
}

pub fn verify_metric_axioms(space: &dyn Space, triples: &[[StatePoint; 3]]) -> Result<MetricReport> {
    let mut r = MetricReport::default();
    for [a, b, c] in triples {
        let ab = space.distance(a, b)?;
        let ba = space.distance(b, a)?;
        let bc = space.distance(b, c)?;
        let ac = space.distance(a, c)?;
        r.symmetry = r.symmetry.max((ab - ba).abs());
        r.identity = r.identity.max(space.distance(a, a)?);
        r.triangle = r.triangle.max(ac - ab - bc);
        r.nonnegativity = r.nonnegativity.max(-ab);
        if a != b && ab == 0.0 {
            // distinct coordinates at zero distance only happen if the chart collapses
            r.identity = f64::INFINITY;
        }
    }
    Ok(r)
}

/// Max over an 11x11 grid of `|d(g(s),g(t)) - |t-s| d(p,q)|`.
pub fn verify_geodesic_property(space: &dyn Space, p: &StatePoint, q: &StatePoint) -> Result<f64> {
    let d = space.distance(p, q)?;
    let ts = math::linspace(0.0, 1.0, 11);
    let pts: Vec<StatePoint> = ts.iter().map(|&t| space.geodesic_point(p, q, t)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, a) in pts.iter().enumerate() {
        for (j, b) in pts.iter().enumerate() {
            let want = (ts[i] - ts[j]).abs() * d;
            worst = worst.max((space.distance(a, b)? - want).abs());
        }
    }
    Ok(worst)
}

/// Max of `E(g(t)) - [(1-t)E(g0) + tE(g1) - k/2 t(1-t) d^2]` over t in {0.1..0.9}.
/// Pairs with an infinite endpoint energy are skipped (the inequality is vacuous).
pub fn verify_kappa_convexity(space: &dyn Space, pairs: &[(StatePoint, StatePoint)]) -> Result<f64> {
    let kappa = space.kappa();
    let mut worst = f64::NEG_INFINITY;
    for (p, q) in pairs {
        let (Some(e0), Some(e1)) = (space.energy(p).finite(), space.energy(q).finite()) else {
            continue;
        };
        let d = space.distance(p, q)?;
        let d2 = d * d;
        for k in 1..10 {
            let t = k as f64 / 10.0;
            let bound = (1.0 - t) * e0 + t * e1 - 0.5 * kappa * t * (1.0 - t) * d2;
            let e = space.energy(&space.geodesic_point(p, q, t)?);
            let v = match e {
                ExtReal::Finite(x) => x - bound,
                ExtReal::PosInf => f64::INFINITY,
                ExtReal::NegInf => f64::NEG_INFINITY,
            };
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// Unit chart directions used to probe geodesic spheres: the coordinate axes
/// and a deterministic spread of mixed directions, both signs.
fn probe_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    if n > 1 {
        for k in 1..=16 {
            let v: Vec<f64> = (0..n).map(|i| libm::sin((k * (i + 1)) as f64 * 1.618_033_988_75 + k as f64)).collect();
            let nv = math::norm(&v);
            if nv > 0.0 {
                dirs.push(v.iter().map(|x| x / nv).collect());
            }
        }
    }
    let neg: Vec<Vec<f64>> = dirs.iter().map(|d| d.iter().map(|x| -x).collect()).collect();
    dirs.extend(neg);
    dirs
}

/// Local slope of `f` at `p` from its definition: the max of
/// `(f(p) - f(q))^+ / d(p,q)` over chart spheres of radii {1e-2,1e-3,1e-4}*scale,
/// extrapolated linearly to radius zero from the two smallest radii.
///
/// `extra_dirs` lets callers add directions they know matter (e.g. the
/// steepest one); in one dimension the axis directions are already exhaustive.
pub fn slope_by_definition<F>(space: &dyn Space, f: F, p: &StatePoint, extra_dirs: &[Vec<f64>]) -> Result<ExtReal>
where
    F: Fn(&StatePoint) -> ExtReal,
{
    space.validate(p)?;
    let fp = match f(p) {
        ExtReal::Finite(v) => v,
        _ => return Ok(ExtReal::PosInf),
    };
    let y = space.to_chart(p);
    let mut dirs = probe_directions(y.len());
    for d in extra_dirs {
        let nd = math::norm(d);
        if nd > 0.0 {
            dirs.push(d.iter().map(|x| x / nd).collect());
        }
    }
    let radii = [1e-2, 1e-3, 1e-4].map(|r| r * space.scale());
    let mut sup = [0.0f64; 3];
    for (k, &r) in radii.iter().enumerate() {
        for d in &dirs {
            let mut q = y.clone();
            for (qi, di) in q.iter_mut().zip(d) {
                *qi += r * di;
            }
            let mut proj = q.clone();
            space.project_chart(&mut proj);
            if math::dist(&proj, &q) > 1e-12 * r {
                continue;
            }
            let qp = space.from_chart(&q);
            let dq = math::dist(&y, &q);
            if let ExtReal::Finite(fq) = f(&qp) {
                sup[k] = sup[k].max((fp - fq).max(0.0) / dq);
            }
        }
    }
    let (r1, r2) = (radii[1], radii[2]);
    let extrap = sup[2] - r2 * (sup[1] - sup[2]) / (r1 - r2);
    Ok(ExtReal::from_f64(extrap.max(0.0)))
}

/// Draws `n` triples of sampled points.
pub fn sample_triples(space: &dyn Space, rng: &mut dyn RngCore, n: usize) -> Vec<[StatePoint; 3]> {
    (0..n).map(|_| [space.sample_point(rng), space.sample_point(rng), space.sample_point(rng)]).collect()
}

pub fn sample_pairs(space: &dyn Space, rng: &mut dyn RngCore, n: usize) -> Vec<(StatePoint, StatePoint)> {
    (0..n).map(|_| (space.sample_point(rng), space.sample_point(rng))).collect()
}

/// Human-readable tag for reports.
pub fn describe(space: &dyn Space) -> String {
    format!("{}(dim={}, kappa={})", space.id(), space.dimension(), space.kappa())
}
