//! Ekeland's principle on finite sets and the quadruplication construction.

pub mod jensen;
pub mod key_estimates;
pub mod principle;
pub mod quadruple;

pub use jensen::jensen_distance_check;
pub use key_estimates::{residuals_shrink, verify_key_estimates, KeyEstimateReport};
pub use principle::{ekeland_optimize, verify_ekeland, EkelandProblem, EkelandReport, EkelandResult};
pub use quadruple::{fitted_duplication_constant, quadruplicate, tataru_penalty, QuadrupleConfig, QuadrupleReport, QuadrupleState, TataruPenalty, QUADRUPLE_CAP};
