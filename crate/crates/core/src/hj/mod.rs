//! Hamilton-Jacobi layer: test functions and their Hamiltonians, viscosity
//! checks, the resolvent solver and the comparison check.

pub mod data;
pub mod resolvent;
pub mod rollout;
pub mod sandwich;
pub mod test_fn;
pub mod viscosity;

pub use data::{DataFunction, DATA_BUILTINS};
pub use resolvent::{bellman_residual, cir_grid, solve_resolvent, solve_resolvent_cir, uniform_grid, ControlModel1d, ResolventSolution};
pub use rollout::{value_by_rollout, RolloutConfig, RolloutResult};
pub use sandwich::{hamiltonian_sandwich_check, SandwichReport, SANDWICH_B0};
pub use test_fn::{eval_lower, eval_upper, lower_g, upper_g, LowerEvaluator, LowerTestFunction, UpperEvaluator, UpperTestFunction};
pub use viscosity::{check_comparison, verify_subsolution, verify_supersolution, ComparisonReport, GridFunction, ViscosityRecord, ViscosityReport};
