//! The JSON experiment format and its validation.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Ou {
        #[serde(default = "one")]
        kappa: f64,
    },
    Quadratic {
        #[serde(default = "one_usize")]
        dimension: usize,
        kappa: f64,
        #[serde(default = "zero_name")]
        perturbation: String,
    },
    Cir {
        mu: f64,
        x_lo: Option<f64>,
        x_hi: Option<f64>,
    },
    #[serde(rename = "wasserstein1d")]
    Wasserstein1d {
        m: usize,
        #[serde(default = "entropy_name")]
        internal: String,
        #[serde(default = "zero_name")]
        potential: String,
        #[serde(default = "zero_name")]
        interaction: String,
    },
    AllenCahn {
        n_grid: usize,
        #[serde(default = "one")]
        length: f64,
        #[serde(default)]
        kappa: f64,
        #[serde(default = "zero_name")]
        potential: String,
    },
}

/// A state given as a scalar, a coordinate vector, or (Wasserstein-1D) a Gaussian.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Coords(Vec<f64>),
    Gaussian { mean: f64, sigma: f64 },
}

/// A list of states, or a uniform grid of scalar states.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointSet {
    Grid { lo: f64, hi: f64, n: usize },
    List(Vec<PointSpec>),
}

#[derive(Debug, Clone, Copy, Default, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Exact,
    Mms,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Flow(FlowParams),
    Evi(EviParams),
    Tataru(TataruParams),
    Resolvent(ResolventParams),
    Viscosity(ViscosityParams),
    Comparison(ComparisonParams),
    Quadruplication(QuadruplicationParams),
    Properties(PropertiesParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Flow(_) => "flow",
            Experiment::Evi(_) => "evi",
            Experiment::Tataru(_) => "tataru",
            Experiment::Resolvent(_) => "resolvent",
            Experiment::Viscosity(_) => "viscosity",
            Experiment::Comparison(_) => "comparison",
            Experiment::Quadruplication(_) => "quadruplication",
            Experiment::Properties(_) => "properties",
        }
    }
}

pub const EXPERIMENT_KINDS: [&str; 8] = ["comparison", "evi", "flow", "properties", "quadruplication", "resolvent", "tataru", "viscosity"];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub start: PointSpec,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    pub jko_inner_tol: Option<f64>,
    pub jko_max_iter: Option<usize>,
    /// Second start point for the contraction check.
    pub partner: Option<PointSpec>,
    #[serde(default = "tol_1e3")]
    pub contraction_tol: f64,
    pub energy_identity_tol: Option<f64>,
    /// Bound on the endpoint distance to the closed-form flow.
    pub reference_tol: Option<f64>,
    /// Step sizes for an endpoint-error convergence study against the closed-form flow.
    #[serde(default)]
    pub convergence_dts: Vec<f64>,
    #[serde(default = "ratio_range")]
    pub convergence_ratio: [f64; 2],
    #[serde(default)]
    pub assert_energy_monotone: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EviParams {
    pub start: PointSpec,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    pub jko_inner_tol: Option<f64>,
    pub jko_max_iter: Option<usize>,
    #[serde(default)]
    pub probes: Vec<PointSpec>,
    /// Extra probes drawn from the space with the run seed.
    #[serde(default)]
    pub probe_samples: usize,
    /// Defaults to `10 dt`.
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub pi: PointSpec,
    pub rho: PointSpec,
    pub expect_value: Option<f64>,
    pub expect_t_star: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TataruParams {
    #[serde(default = "tol_1e3")]
    pub flow_dt: f64,
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    /// CSV of pairs: the first `dim` columns are `pi`, the next `dim` are `rho`.
    pub pairs_csv: Option<PathBuf>,
    #[serde(default = "tol_1e3")]
    pub value_tol: f64,
    #[serde(default = "tol_1e2")]
    pub t_star_tol: f64,
    /// Sample count for the Lipschitz, flow-Lipschitz and triangle suites (0 skips them).
    #[serde(default)]
    pub samples: usize,
    #[serde(default = "half")]
    pub jitter: f64,
    #[serde(default = "r_values")]
    pub r_values: Vec<f64>,
    #[serde(default = "tol_1e4")]
    pub flow_lipschitz_dt: f64,
    #[serde(default = "tol_1e4")]
    pub suite_tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSpec {
    pub lambda: f64,
    /// Builtin data function, e.g. `affine_clipped:1:0:-10:2`.
    pub data: String,
    pub n_grid: usize,
    /// Grid interval; defaults to the CIR truncation, required otherwise.
    pub domain: Option<[f64; 2]>,
    #[serde(default = "tol_1e8")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutSpec {
    /// States (snapped to the nearest resolvent node) to roll out from.
    pub nodes: Vec<f64>,
    #[serde(default = "controls")]
    pub controls: GridSpec,
    #[serde(default = "tol_1e2")]
    pub dt: f64,
    #[serde(default = "rollout_horizon")]
    pub horizon: f64,
    pub n_chart: Option<usize>,
    pub substeps: Option<usize>,
    /// Window `[f - a dt - b dx, f + c dx]` with `(a, b, c)` below.
    #[serde(default = "ten")]
    pub window_dt_factor: f64,
    #[serde(default = "five")]
    pub window_dx_factor: f64,
    #[serde(default = "one")]
    pub upper_dx_factor: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventParams {
    pub resolvent: ResolventSpec,
    pub rollout: Option<RolloutSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityParams {
    pub resolvent: ResolventSpec,
    #[serde(default = "a_values")]
    pub a_values: Vec<f64>,
    #[serde(default = "b_values")]
    pub b_values: Vec<f64>,
    /// Anchor pairs per `(a, b)` combination.
    #[serde(default = "five_usize")]
    pub per_pair: usize,
    /// Anchors are every `anchor_stride`-th node inside `anchor_range`.
    #[serde(default = "forty")]
    pub anchor_stride: usize,
    pub anchor_range: Option<[f64; 2]>,
    /// Tolerance in units of the grid spacing.
    #[serde(default = "ten")]
    pub tol_factor: f64,
    #[serde(default = "tol_1e2")]
    pub flow_dt: f64,
    /// Constant added to the solved resolvent before testing (0 tests the solution itself).
    #[serde(default)]
    pub solution_shift: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonParams {
    pub resolvent: ResolventSpec,
    /// `v` solves the resolvent with data `h - delta`.
    pub deltas: Vec<f64>,
    #[serde(default = "ten")]
    pub tol_factor: f64,
    /// Tolerance of a second solve with identical data, compared against the first (absent skips it).
    pub identical_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgridSpec {
    pub start: usize,
    pub end: usize,
    #[serde(default = "one_usize")]
    pub step: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadruplicationParams {
    pub resolvent: ResolventSpec,
    /// `v` solves with data `h - delta`.
    #[serde(default)]
    pub delta: f64,
    pub subgrid: SubgridSpec,
    pub alphas: Vec<f64>,
    pub nu0: PointSpec,
    #[serde(default)]
    pub c1: f64,
    #[serde(default = "tol_1e2")]
    pub flow_dt: f64,
    #[serde(default = "fit_samples")]
    pub fit_samples: usize,
    /// Required `trend(last) / trend(first)`.
    #[serde(default = "tenth")]
    pub trend_ratio: f64,
    #[serde(default = "shrink")]
    pub key_shrink: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichSpec {
    #[serde(default = "a_values")]
    pub a_values: Vec<f64>,
    pub refs: PointSet,
    pub samples: PointSet,
    #[serde(default = "tol_1e4")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JensenSpec {
    pub samples: usize,
    #[serde(default = "jensen_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "tol_1e9")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EkelandSpec {
    pub problems: usize,
    #[serde(default = "eighty")]
    pub max_points: usize,
    #[serde(default = "delta_range")]
    pub delta_range: [f64; 2],
    #[serde(default = "tol_1e9")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCannCase {
    pub integrand: String,
    pub expect_pass: bool,
    /// Substring that must appear among the failed predicate names.
    pub expect_violation: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertiesParams {
    /// Samples for the metric, geodesic and convexity sweeps (0 skips them).
    #[serde(default = "two_hundred")]
    pub samples: usize,
    pub sandwich: Option<SandwichSpec>,
    pub jensen: Option<JensenSpec>,
    pub ekeland: Option<EkelandSpec>,
    #[serde(default)]
    pub mccann: Vec<McCannCase>,
    #[serde(default = "s_max")]
    pub mccann_s_max: f64,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn five() -> f64 {
    5.0
}
fn five_usize() -> usize {
    5
}
fn ten() -> f64 {
    10.0
}
fn tenth() -> f64 {
    0.1
}
fn half() -> f64 {
    0.5
}
fn shrink() -> f64 {
    1.5
}
fn forty() -> usize {
    40
}
fn eighty() -> usize {
    80
}
fn two_hundred() -> usize {
    200
}
fn fit_samples() -> usize {
    200
}
fn tol_1e2() -> f64 {
    1e-2
}
fn tol_1e3() -> f64 {
    1e-3
}
fn tol_1e4() -> f64 {
    1e-4
}
fn tol_1e8() -> f64 {
    1e-8
}
fn tol_1e9() -> f64 {
    1e-9
}
fn s_max() -> f64 {
    1e6
}
fn rollout_horizon() -> f64 {
    25.0
}
fn ratio_range() -> [f64; 2] {
    [1.7, 2.3]
}
fn r_values() -> Vec<f64> {
    vec![1e-2, 1e-3]
}
fn a_values() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}
fn b_values() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1]
}
fn jensen_eps() -> Vec<f64> {
    vec![0.01, 0.1, 0.2, 0.3, 0.333]
}
fn delta_range() -> [f64; 2] {
    [0.05, 2.0]
}
fn controls() -> GridSpec {
    GridSpec { lo: -4.0, hi: 4.0, n: 81 }
}
fn zero_name() -> String {
    "zero".into()
}
fn entropy_name() -> String {
    "entropy".into()
}

fn fail(field: &str, what: &str, got: impl std::fmt::Display) -> CliError {
    CliError::config(format!("{field} {what} (got {got})"))
}

pub fn positive(field: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(fail(field, "must be positive", v))
    }
}

pub fn nonnegative(field: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(fail(field, "must be nonnegative", v))
    }
}

pub fn at_least(field: &str, v: usize, min: usize) -> CliResult<()> {
    if v >= min {
        Ok(())
    } else {
        Err(fail(field, &format!("must be at least {min}"), v))
    }
}

pub fn all_positive(field: &str, vs: &[f64]) -> CliResult<()> {
    if vs.is_empty() {
        return Err(CliError::config(format!("{field} must not be empty")));
    }
    for (i, &v) in vs.iter().enumerate() {
        positive(&format!("{field}[{i}]"), v)?;
    }
    Ok(())
}

pub fn interval(field: &str, r: [f64; 2]) -> CliResult<()> {
    if r[0] < r[1] {
        Ok(())
    } else {
        Err(fail(field, "must satisfy lo < hi", format!("[{}, {}]", r[0], r[1])))
    }
}

fn jko(inner: Option<f64>, max_iter: Option<usize>) -> CliResult<()> {
    if let Some(t) = inner {
        positive("experiment.jko_inner_tol", t)?;
    }
    if let Some(m) = max_iter {
        at_least("experiment.jko_max_iter", m, 1)?;
    }
    Ok(())
}

fn flow_times(dt: f64, horizon: f64) -> CliResult<()> {
    positive("experiment.dt", dt)?;
    positive("experiment.horizon", horizon)?;
    if dt > horizon {
        return Err(fail("experiment.dt", &format!("must not exceed experiment.horizon = {horizon}"), dt));
    }
    Ok(())
}

impl ResolventSpec {
    pub fn validate(&self) -> CliResult<()> {
        positive("experiment.resolvent.lambda", self.lambda)?;
        at_least("experiment.resolvent.n_grid", self.n_grid, 3)?;
        positive("experiment.resolvent.tol", self.tol)?;
        if let Some(d) = self.domain {
            interval("experiment.resolvent.domain", d)?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// Checks every scalar field; space-dependent checks happen when points and grids are built.
    pub fn validate(&self) -> CliResult<()> {
        if self.output_dir.as_os_str().is_empty() {
            return Err(CliError::config("output_dir must not be empty"));
        }
        match &self.experiment {
            Experiment::Flow(p) => {
                flow_times(p.dt, p.horizon)?;
                jko(p.jko_inner_tol, p.jko_max_iter)?;
                nonnegative("experiment.contraction_tol", p.contraction_tol)?;
                if let Some(t) = p.energy_identity_tol {
                    nonnegative("experiment.energy_identity_tol", t)?;
                }
                if let Some(t) = p.reference_tol {
                    nonnegative("experiment.reference_tol", t)?;
                }
                if !p.convergence_dts.is_empty() {
                    all_positive("experiment.convergence_dts", &p.convergence_dts)?;
                    if p.convergence_dts.len() < 2 {
                        return Err(CliError::config("experiment.convergence_dts needs at least two step sizes"));
                    }
                    interval("experiment.convergence_ratio", p.convergence_ratio)?;
                }
            }
            Experiment::Evi(p) => {
                flow_times(p.dt, p.horizon)?;
                jko(p.jko_inner_tol, p.jko_max_iter)?;
                if p.probes.is_empty() && p.probe_samples == 0 {
                    return Err(CliError::config("experiment.probes is empty and experiment.probe_samples is 0: nothing to check"));
                }
                if let Some(t) = p.tol {
                    nonnegative("experiment.tol", t)?;
                }
            }
            Experiment::Tataru(p) => {
                positive("experiment.flow_dt", p.flow_dt)?;
                positive("experiment.value_tol", p.value_tol)?;
                positive("experiment.t_star_tol", p.t_star_tol)?;
                nonnegative("experiment.jitter", p.jitter)?;
                all_positive("experiment.r_values", &p.r_values)?;
                positive("experiment.flow_lipschitz_dt", p.flow_lipschitz_dt)?;
                nonnegative("experiment.suite_tol", p.suite_tol)?;
                if p.pairs.is_empty() && p.pairs_csv.is_none() && p.samples == 0 {
                    return Err(CliError::config("experiment needs pairs, pairs_csv or samples > 0"));
                }
            }
            Experiment::Resolvent(p) => {
                p.resolvent.validate()?;
                if let Some(r) = &p.rollout {
                    if r.nodes.is_empty() {
                        return Err(CliError::config("experiment.rollout.nodes must not be empty"));
                    }
                    interval("experiment.rollout.controls", [r.controls.lo, r.controls.hi])?;
                    at_least("experiment.rollout.controls.n", r.controls.n, 2)?;
                    positive("experiment.rollout.dt", r.dt)?;
                    positive("experiment.rollout.horizon", r.horizon)?;
                    nonnegative("experiment.rollout.window_dt_factor", r.window_dt_factor)?;
                    nonnegative("experiment.rollout.window_dx_factor", r.window_dx_factor)?;
                    nonnegative("experiment.rollout.upper_dx_factor", r.upper_dx_factor)?;
                }
            }
            Experiment::Viscosity(p) => {
                p.resolvent.validate()?;
                all_positive("experiment.a_values", &p.a_values)?;
                all_positive("experiment.b_values", &p.b_values)?;
                at_least("experiment.per_pair", p.per_pair, 1)?;
                at_least("experiment.anchor_stride", p.anchor_stride, 1)?;
                if let Some(r) = p.anchor_range {
                    interval("experiment.anchor_range", r)?;
                }
                nonnegative("experiment.tol_factor", p.tol_factor)?;
                positive("experiment.flow_dt", p.flow_dt)?;
                if !p.solution_shift.is_finite() {
                    return Err(fail("experiment.solution_shift", "must be finite", p.solution_shift));
                }
            }
            Experiment::Comparison(p) => {
                p.resolvent.validate()?;
                if p.deltas.is_empty() {
                    return Err(CliError::config("experiment.deltas must not be empty"));
                }
                for (i, d) in p.deltas.iter().enumerate() {
                    nonnegative(&format!("experiment.deltas[{i}]"), *d)?;
                }
                nonnegative("experiment.tol_factor", p.tol_factor)?;
                if let Some(t) = p.identical_tol {
                    positive("experiment.identical_tol", t)?;
                }
            }
            Experiment::Quadruplication(p) => {
                p.resolvent.validate()?;
                nonnegative("experiment.delta", p.delta)?;
                at_least("experiment.subgrid.step", p.subgrid.step, 1)?;
                if p.subgrid.start > p.subgrid.end || p.subgrid.end >= p.resolvent.n_grid {
                    return Err(CliError::config(format!(
                        "experiment.subgrid must satisfy start <= end < resolvent.n_grid (got {}..={} with n_grid {})",
                        p.subgrid.start, p.subgrid.end, p.resolvent.n_grid
                    )));
                }
                all_positive("experiment.alphas", &p.alphas)?;
                nonnegative("experiment.c1", p.c1)?;
                positive("experiment.flow_dt", p.flow_dt)?;
                at_least("experiment.fit_samples", p.fit_samples, 1)?;
                positive("experiment.trend_ratio", p.trend_ratio)?;
                positive("experiment.key_shrink", p.key_shrink)?;
            }
            Experiment::Properties(p) => {
                if let Some(s) = &p.sandwich {
                    all_positive("experiment.sandwich.a_values", &s.a_values)?;
                    nonnegative("experiment.sandwich.tol", s.tol)?;
                }
                if let Some(j) = &p.jensen {
                    at_least("experiment.jensen.samples", j.samples, 1)?;
                    all_positive("experiment.jensen.eps", &j.eps)?;
                    nonnegative("experiment.jensen.tol", j.tol)?;
                }
                if let Some(e) = &p.ekeland {
                    at_least("experiment.ekeland.max_points", e.max_points, 2)?;
                    interval("experiment.ekeland.delta_range", e.delta_range)?;
                    positive("experiment.ekeland.delta_range[0]", e.delta_range[0])?;
                    nonnegative("experiment.ekeland.tol", e.tol)?;
                }
                positive("experiment.mccann_s_max", p.mccann_s_max)?;
            }
        }
        Ok(())
    }
}
