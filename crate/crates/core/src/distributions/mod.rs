//! Productivity and size laws, the fit-family zoo, and special functions.

mod family;
mod lognormal;
mod pareto;
pub mod special;

pub use family::{FamilyKind, FitFamily};
pub use lognormal::Lognormal;
pub use pareto::Pareto;
pub use special::{erf, erfc, ln_erfc, log_sum_exp, normal_cdf, normal_quantile, normal_sf, LogSumExp};
