use super::result::{EstimationResult, Method};
use crate::data::SummaryDataset;
use crate::error::Result;
use crate::kernels::mm::{mm_regression_with, MmOptions};
use crate::scalar::Real;

/// MM regression on the σ_Y-standardised system (rows divided by σ_Yj, no intercept).
pub fn mvmr_robust<T: Real>(ds: &SummaryDataset<T>) -> Result<EstimationResult<T>> {
    mvmr_robust_with(ds, &MmOptions::default())
}

/// Standard errors use the robust covariance with the residual scale floored at
/// one, so under-dispersion never shrinks them below the fixed-effect level.
///
/// Notes: `scale`, `converged`.
pub fn mvmr_robust_with<T: Real>(ds: &SummaryDataset<T>, opts: &MmOptions) -> Result<EstimationResult<T>> {
    let x = ds.weighted_design();
    let y = ndarray::Zip::from(ds.beta_y()).and(ds.se_y()).map_collect(|&b, &s| b / s);
    let fit = mm_regression_with(x.view(), y.view(), opts)?;
    let scale = fit.scale.unwrap_or_else(T::one);
    let cov = fit.covariance.as_ref().expect("MM covariance");
    let s = scale.max(T::one());
    let se = (0..ds.n_risk_factors()).map(|i| s * cov[[i, i]].sqrt()).collect();
    Ok(EstimationResult::from_estimates(
        Method::Robust,
        fit.coefficients.to_vec(),
        se,
        ds.variant_ids().to_vec(),
        None,
    )
    .note("scale", scale)
    .note("converged", if fit.converged { T::one() } else { T::zero() }))
}
