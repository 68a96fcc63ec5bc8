//! Concrete spaces: CIR half-line, Euclidean quadratic energies, periodic
//! Allen-Cahn fields and one-dimensional Wasserstein space.

pub mod allen_cahn;
pub mod cir;
pub mod mccann;
pub mod potential;
pub mod quadratic;
pub mod wasserstein;

pub use allen_cahn::{allen_cahn_information, make_allen_cahn, AllenCahnDescriptor, AllenCahnSpace};
pub use cir::{make_cir, CirDescriptor, CirSpace};
pub use mccann::{mccann_check, McCannReport, Monotonicity};
pub use potential::{Integrand, Potential, POTENTIAL_BUILTINS};
pub use quadratic::{make_quadratic, QuadraticDescriptor, QuadraticSpace};
pub use wasserstein::{make_wasserstein1d, wasserstein_information, Wasserstein1DDescriptor, Wasserstein1DSpace};

/// Builtin space names, sorted.
pub const SPACE_BUILTINS: [&str; 5] = ["allen_cahn", "cir", "ou", "quadratic", "wasserstein1d"];
