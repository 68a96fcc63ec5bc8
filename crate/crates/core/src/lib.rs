//! Metric gradient flows and the Hamilton-Jacobi comparison machinery built on them.
//!
//! Every concrete space is exposed through an isometric flat chart: distances are
//! Euclidean there and geodesics are straight segments. Flows, slopes and the
//! Hamiltonian checks are all computed in that chart.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod ekeland;
pub mod error;
pub mod ext;
pub mod flow;
pub mod hj;
pub mod math;
pub mod point;
pub mod space;
pub mod spaces;
pub mod tataru;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use point::StatePoint;
pub use space::{Space, SpaceHandle, Tolerances};

/// Crate version, for run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
