//! Statistical toolkit for the artificial urban wage premium.
//!
//! Aggregate output of a group of `n` workers whose productivities are
//! i.i.d. lognormal scales superlinearly with `n` for as long as the
//! largest draw dominates the sum. This crate samples that null model,
//! predicts the resulting elasticities in closed form, simulates city
//! ensembles, runs the worker-relocation permutation test, and fits the
//! candidate distribution families used to calibrate everything.
//!
//! The analytic core ([`distributions`], [`evt`], [`elasticity`],
//! [`regress`]) is generic over [`Scalar`] (`f32` or `f64`). The
//! Monte Carlo and data-handling layers work in `f64`; the aliases
//! exported at the crate root name the `f64` instantiations.

pub mod distributions;
pub mod elasticity;
pub mod error;
pub mod evt;
pub mod fit;
pub mod ingest;
pub mod randomize;
pub mod regress;
pub mod rng;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use scalar::Scalar;

/// Lognormal productivity law in `f64`.
pub type LognormalSpec = distributions::Lognormal<f64>;
/// Lognormal productivity law in `f32`.
pub type LognormalSpecF32 = distributions::Lognormal<f32>;
/// Pareto size law in `f64`.
pub type ParetoSpec = distributions::Pareto<f64>;
/// Pareto size law in `f32`.
pub type ParetoSpecF32 = distributions::Pareto<f32>;
/// Log-log OLS fit in `f64`.
pub type RegressionResult = regress::OlsFit<f64>;
/// Log-log OLS fit in `f32`.
pub type RegressionResultF32 = regress::OlsFit<f32>;
/// Two-coefficient z comparison in `f64`.
pub type CoefficientComparison = regress::Comparison<f64>;
/// Closed-form elasticity prediction in `f64`.
pub type ElasticityPrediction = elasticity::Prediction<f64>;
/// Extreme-value summary of one lognormal sample in `f64`.
pub type ExtremeValueSummary = evt::Summary<f64>;
