//! Builds spaces, states and resolvent grids from config descriptors.

use evikit_core::hj::{uniform_grid, ControlModel1d, DataFunction, GridFunction};
use evikit_core::math::linspace;
use evikit_core::spaces::*;
use evikit_core::{Space, StatePoint};

use crate::config::{PointSet, PointSpec, ResolventSpec, SpaceConfig};
use crate::error::{CliError, CliResult};

pub enum BuiltSpace {
    Quadratic(QuadraticSpace),
    Cir(CirSpace),
    Wasserstein(Wasserstein1DSpace),
    AllenCahn(AllenCahnSpace),
}

fn named<T>(field: &str, r: evikit_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::config(format!("{field}: {e}")))
}

impl BuiltSpace {
    pub fn build(cfg: &SpaceConfig) -> CliResult<Self> {
        let built = match cfg {
            SpaceConfig::Ou { kappa } => BuiltSpace::Quadratic(named("space", make_quadratic(QuadraticDescriptor::ou(*kappa)))?),
            SpaceConfig::Quadratic { dimension, kappa, perturbation } => {
                let perturbation = named("space.perturbation", Potential::parse(perturbation))?;
                BuiltSpace::Quadratic(named("space", make_quadratic(QuadraticDescriptor { dimension: *dimension, kappa: *kappa, perturbation }))?)
            }
            SpaceConfig::Cir { mu, x_lo, x_hi } => {
                let d = CirDescriptor::new(*mu);
                let desc = CirDescriptor { mu: *mu, x_lo: x_lo.unwrap_or(d.x_lo), x_hi: x_hi.unwrap_or(d.x_hi) };
                BuiltSpace::Cir(named("space", make_cir(desc))?)
            }
            SpaceConfig::Wasserstein1d { m, internal, potential, interaction } => {
                let desc = Wasserstein1DDescriptor {
                    m: *m,
                    internal: named("space.internal", Integrand::parse(internal))?,
                    potential: named("space.potential", Potential::parse(potential))?,
                    interaction: named("space.interaction", Potential::parse(interaction))?,
                };
                BuiltSpace::Wasserstein(named("space", make_wasserstein1d(desc))?)
            }
            SpaceConfig::AllenCahn { n_grid, length, kappa, potential } => {
                let potential = named("space.potential", Potential::parse(potential))?;
                BuiltSpace::AllenCahn(named("space", make_allen_cahn(AllenCahnDescriptor { n_grid: *n_grid, length: *length, kappa: *kappa, potential }))?)
            }
        };
        Ok(built)
    }

    pub fn space(&self) -> &dyn Space {
        match self {
            BuiltSpace::Quadratic(s) => s,
            BuiltSpace::Cir(s) => s,
            BuiltSpace::Wasserstein(s) => s,
            BuiltSpace::AllenCahn(s) => s,
        }
    }

    /// The one-dimensional control model behind the resolvent, when the space has one.
    pub fn control_model(&self) -> Option<&dyn ControlModel1d> {
        match self {
            BuiltSpace::Quadratic(s) if s.dimension() == 1 => Some(s),
            BuiltSpace::Cir(s) => Some(s),
            _ => None,
        }
    }

    pub fn point(&self, spec: &PointSpec, field: &str) -> CliResult<StatePoint> {
        let p = match spec {
            PointSpec::Scalar(x) => named(field, StatePoint::new(vec![*x]))?,
            PointSpec::Coords(c) => named(field, StatePoint::new(c.clone()))?,
            PointSpec::Gaussian { mean, sigma } => match self {
                BuiltSpace::Wasserstein(w) => {
                    if !(*sigma > 0.0 && sigma.is_finite() && mean.is_finite()) {
                        return Err(CliError::config(format!("{field}: Gaussian needs a finite mean and sigma > 0")));
                    }
                    w.gaussian(*mean, *sigma)
                }
                _ => return Err(CliError::config(format!("{field}: Gaussian states are only defined on wasserstein1d"))),
            },
        };
        named(field, self.space().validate(&p))?;
        Ok(p)
    }

    pub fn points(&self, set: &PointSet, field: &str) -> CliResult<Vec<StatePoint>> {
        match set {
            PointSet::Grid { lo, hi, n } => {
                if !(lo <= hi) || *n == 0 {
                    return Err(CliError::config(format!("{field} must satisfy lo <= hi and n >= 1")));
                }
                linspace(*lo, *hi, *n).into_iter().enumerate().map(|(i, x)| self.point(&PointSpec::Scalar(x), &format!("{field}[{i}]"))).collect()
            }
            PointSet::List(v) => v.iter().enumerate().map(|(i, p)| self.point(p, &format!("{field}[{i}]"))).collect(),
        }
    }

    pub fn resolvent_model(&self) -> CliResult<&dyn ControlModel1d> {
        self.control_model().ok_or_else(|| {
            CliError::config(format!("space {} has no one-dimensional resolvent model (use cir, ou or a 1-D quadratic space)", self.space().id()))
        })
    }

    /// Uniform grid and data for a resolvent spec, plus the grid spacing.
    pub fn resolvent_data(&self, spec: &ResolventSpec) -> CliResult<(DataFunction, GridFunction, f64)> {
        self.resolvent_model()?;
        let h = named("experiment.resolvent.data", DataFunction::parse(&spec.data))?;
        let [lo, hi] = match (spec.domain, self) {
            (Some(d), _) => d,
            (None, BuiltSpace::Cir(c)) => [c.descriptor().x_lo, c.descriptor().x_hi],
            (None, _) => return Err(CliError::config("experiment.resolvent.domain is required for this space")),
        };
        let grid = uniform_grid(lo, hi, spec.n_grid);
        for p in &grid {
            named("experiment.resolvent.domain", self.space().validate(p))?;
        }
        let values = GridFunction::from_fn(grid, |p| h.eval(p))?;
        Ok((h, values, (hi - lo) / (spec.n_grid - 1) as f64))
    }
}
