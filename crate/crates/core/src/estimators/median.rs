use ndarray::{Array1, Array2};

use super::result::{EstimationResult, Method};
use crate::data::SummaryDataset;
use crate::error::{MvmrError, Result};
use crate::kernels::random::standard_normal;
use crate::kernels::{weighted_lad, weighted_lad_from, RandomSource};
use crate::scalar::Real;

/// Weighted LAD regression with weights σ_Yj^{-2}; the standard error is the
/// standard deviation of `bootstrap` refits on data drawn from
/// β̂*_Yj ~ N(β̂_Yj, σ²_Yj) and β̂*_Xjk ~ N(β̂_Xjk, σ²_Xjk) independently.
///
/// Replicate `b` draws from `rs.substream(b)`, variant by variant, outcome first.
pub fn mvmr_median<T: Real>(ds: &SummaryDataset<T>, bootstrap: usize, rs: RandomSource) -> Result<EstimationResult<T>> {
    if bootstrap < 100 {
        return Err(MvmrError::Argument(format!(
            "median bootstrap needs at least 100 replicates, got {bootstrap}"
        )));
    }
    let (p, k) = (ds.n_variants(), ds.n_risk_factors());
    let w = ds.weights();
    let point = weighted_lad(ds.beta_x().view(), ds.beta_y().view(), w.view())?;

    let mut draws: Vec<Vec<T>> = vec![Vec::with_capacity(bootstrap); k];
    let mut bx = Array2::<T>::zeros((p, k));
    let mut by = Array1::<T>::zeros(p);
    for b in 0..bootstrap {
        let mut rng = rs.substream(b as u64).rng();
        for j in 0..p {
            by[j] = ds.beta_y()[j] + ds.se_y()[j] * T::lit(standard_normal(&mut rng));
            for c in 0..k {
                bx[[j, c]] = ds.beta_x()[[j, c]] + ds.se_x()[[j, c]] * T::lit(standard_normal(&mut rng));
            }
        }
        let fit = weighted_lad_from(bx.view(), by.view(), w.view(), &point.support)?;
        for c in 0..k {
            draws[c].push(fit.coefficients[c]);
        }
    }
    let n = T::from_usize_lossy(bootstrap);
    let se = draws
        .iter()
        .map(|d| {
            let mean = d.iter().copied().sum::<T>() / n;
            let ss = d.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
            (ss / (n - T::one())).sqrt()
        })
        .collect();
    Ok(EstimationResult::from_estimates(
        Method::Median,
        point.coefficients.to_vec(),
        se,
        ds.variant_ids().to_vec(),
        None,
    )
    .note("lad_objective", point.objective))
}
