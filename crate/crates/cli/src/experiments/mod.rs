//! One runner per experiment kind. Each writes its result files and returns the declared assertions.

mod flow;
mod hj;
mod properties;
mod quadruple;
mod tataru;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Experiment};
use crate::error::CliResult;
use crate::output::Output;
use crate::spaces::BuiltSpace;

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Assertion { name: name.into(), value: Some(value), bound: Some(bound), pass: value <= bound }
    }

    pub fn holds(name: impl Into<String>, pass: bool) -> Self {
        Assertion { name: name.into(), value: None, bound: None, pass }
    }
}

pub fn run(cfg: &ExperimentConfig, sp: &BuiltSpace, out: &mut Output) -> CliResult<Vec<Assertion>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match &cfg.experiment {
        Experiment::Flow(p) => flow::run_flow(p, sp, out),
        Experiment::Evi(p) => flow::run_evi(p, sp, &mut rng, out),
        Experiment::Tataru(p) => tataru::run(p, sp, &mut rng, out),
        Experiment::Resolvent(p) => hj::run_resolvent(p, sp, out),
        Experiment::Viscosity(p) => hj::run_viscosity(p, sp, out),
        Experiment::Comparison(p) => hj::run_comparison(p, sp, out),
        Experiment::Quadruplication(p) => quadruple::run(p, sp, out),
        Experiment::Properties(p) => properties::run(p, sp, &mut rng, out),
    }
}

/// Max of `f` over fixed-size chunks evaluated in parallel; the result does not depend on scheduling.
fn par_max<T: Sync>(items: &[T], chunk: usize, f: impl Fn(&[T]) -> evikit_core::Result<f64> + Sync) -> CliResult<f64> {
    let parts: Vec<f64> = items.par_chunks(chunk.max(1)).map(|c| f(c)).collect::<evikit_core::Result<_>>()?;
    Ok(parts.into_iter().fold(f64::NEG_INFINITY, f64::max))
}
