//! Distribution fitting: likelihood maximization, tail estimation, model
//! ranking and fit diagnostics.

mod diagnostics;
mod mle;
pub mod optimize;
mod tail;

pub use diagnostics::{diagnostic_data, CcdfPoint, Diagnostics};
pub use mle::{aic, bic, dedupe_at_bound, fit_family, rank_models, FitOptions, FittedDistribution, ModelRow};
pub use tail::{estimate_pareto_tail, ParetoFit};
