//! Numerical kernels the estimators are built on.

pub mod lad;
pub mod lasso;
pub mod mm;
pub mod random;
pub mod wls;

pub use lad::{weighted_lad, weighted_lad_from, LadOptions};
pub use lasso::{lambda_max, partial_penalized_lasso, LassoKernel, PenalizedFit};
pub use mm::{bisquare_weight, mm_regression, MmOptions};
pub use random::{normal_draw, RandomSource, SimRng};
pub use wls::weighted_least_squares;

use ndarray::{Array1, Array2};

/// Output of a regression solver.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit<T> {
    pub coefficients: Array1<T>,
    /// Unscaled covariance (WLS: `(X'WX)^{-1}`; MM: robust asymptotic covariance).
    pub covariance: Option<Array2<T>>,
    /// Objective at the returned coefficients.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    /// Residual scale (MM only).
    pub scale: Option<T>,
    /// Observations interpolated exactly (LAD only).
    pub support: Vec<usize>,
}
