//! Multivariable Mendelian randomization from summary statistics.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the command-line tool and the
//! simulation harness use.

pub mod data;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod linalg;
pub mod scalar;
pub mod simulation;
pub mod stats;

pub use data::SummaryDataset;
pub use error::{MvmrError, Result};
pub use estimators::{estimate, estimate_detailed, DetailedEstimate, EstimationResult, EstimatorConfig, Method};
pub use kernels::RandomSource;
pub use scalar::Real;

pub type Dataset = SummaryDataset<f64>;
pub type Estimate = EstimationResult<f64>;
pub type Fit = kernels::LinearFit<f64>;
pub type Dataset32 = SummaryDataset<f32>;
pub type Estimate32 = EstimationResult<f32>;
