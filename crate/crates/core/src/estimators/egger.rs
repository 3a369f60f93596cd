use ndarray::Array2;

use super::result::{Dispersion, EstimationResult, Method};
use crate::data::SummaryDataset;
use crate::error::{MvmrError, Result};
use crate::kernels::weighted_least_squares;
use crate::scalar::Real;

/// IVW with a common unpenalised intercept, after orienting every variant to a
/// positive association with risk factor `primary` (0-based).
///
/// Notes: `intercept`, `intercept_se`, `intercept_p`.
pub fn mvmr_egger<T: Real>(
    ds: &SummaryDataset<T>,
    primary: usize,
    dispersion: Dispersion,
) -> Result<EstimationResult<T>> {
    let ds = ds.orient_to_risk_factor(primary)?;
    let (p, k) = (ds.n_variants(), ds.n_risk_factors());
    if p <= k + 1 {
        return Err(MvmrError::Model(format!(
            "Egger regression needs p > K + 1 (p = {p}, K = {k})"
        )));
    }
    let mut design = Array2::<T>::ones((p, k + 1));
    design.slice_mut(ndarray::s![.., 1..]).assign(ds.beta_x());
    let w = ds.weights();
    let fit = weighted_least_squares(design.view(), ds.beta_y().view(), w.view())?;
    let q = fit.objective;
    let phi = dispersion.factor(q, p - k - 1);
    let cov = fit.covariance.as_ref().expect("WLS covariance");
    let se: Vec<T> = (0..=k).map(|i| (phi * cov[[i, i]]).sqrt()).collect();
    let coef = fit.coefficients.to_vec();
    let intercept = EstimationResult::from_estimates(Method::Egger, vec![coef[0]], vec![se[0]], vec![], None);
    Ok(EstimationResult::from_estimates(
        Method::Egger,
        coef[1..].to_vec(),
        se[1..].to_vec(),
        ds.variant_ids().to_vec(),
        Some(q),
    )
    .note("intercept", coef[0])
    .note("intercept_se", se[0])
    .note("intercept_p", intercept.p_values[0]))
}
