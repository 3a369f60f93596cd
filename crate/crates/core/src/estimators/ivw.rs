use super::result::{Dispersion, EstimationResult, Method};
use crate::data::SummaryDataset;
use crate::error::{MvmrError, Result};
use crate::kernels::weighted_least_squares;
use crate::scalar::Real;

/// Inverse-variance weighted regression of β̂_Y on β̂_X without intercept.
pub fn mvmr_ivw<T: Real>(ds: &SummaryDataset<T>, dispersion: Dispersion) -> Result<EstimationResult<T>> {
    let w = ds.weights();
    let fit = weighted_least_squares(ds.beta_x().view(), ds.beta_y().view(), w.view())?;
    let (p, k) = (ds.n_variants(), ds.n_risk_factors());
    let q = fit.objective;
    let phi = dispersion.factor(q, p - k);
    let cov = fit.covariance.as_ref().expect("WLS covariance");
    let se = (0..k).map(|i| (phi * cov[[i, i]]).sqrt()).collect();
    Ok(EstimationResult::from_estimates(
        Method::Ivw,
        fit.coefficients.to_vec(),
        se,
        ds.variant_ids().to_vec(),
        Some(q),
    ))
}

/// Q = Σ_{j ∈ subset} σ_Yj^{-2} (β̂_Yj − Σ_k β̂_Xjk θ_k)².
pub fn q_statistic<T: Real>(ds: &SummaryDataset<T>, theta: &[T], subset: &[usize]) -> Result<T> {
    if theta.len() != ds.n_risk_factors() {
        return Err(MvmrError::Argument(format!(
            "expected {} effects, got {}",
            ds.n_risk_factors(),
            theta.len()
        )));
    }
    if subset.is_empty() {
        return Err(MvmrError::Argument("heterogeneity subset is empty".into()));
    }
    let mut q = T::zero();
    for &j in subset {
        if j >= ds.n_variants() {
            return Err(MvmrError::Argument(format!("variant index {j} out of range")));
        }
        let fitted = theta.iter().enumerate().fold(T::zero(), |a, (c, &t)| a + ds.beta_x()[[j, c]] * t);
        let r = ds.beta_y()[j] - fitted;
        let s = ds.se_y()[j];
        q += r * r / (s * s);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};

    fn exact(theta: &[f64]) -> SummaryDataset<f64> {
        let bx = array![
            [0.08, 0.02, 0.05, 0.01],
            [0.03, 0.09, 0.01, 0.04],
            [0.06, 0.04, 0.07, 0.02],
            [0.01, 0.05, 0.03, 0.09],
            [0.07, 0.01, 0.02, 0.06],
            [0.02, 0.07, 0.08, 0.03],
            [0.05, 0.03, 0.04, 0.08]
        ];
        let by = bx.dot(&Array1::from(theta.to_vec()));
        let ids = (0..7).map(|i| format!("v{i}")).collect();
        SummaryDataset::new(ids, bx, Array2::zeros((7, 4)), by, Array1::from_elem(7, 0.01)).unwrap()
    }

    #[test]
    fn recovers_exact_effects() {
        let truth = [0.2, 0.1, 0.3, 0.4];
        let r = mvmr_ivw(&exact(&truth), Dispersion::RandomEffects).unwrap();
        for (a, b) in r.estimates.iter().zip(truth) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(r.std_errors.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn single_row_flip_is_invisible() {
        let ds = exact(&[0.2, 0.1, 0.3, 0.4]);
        let mut by = ds.beta_y().clone();
        by[2] += 0.003;
        by[5] -= 0.002;
        let ds = SummaryDataset::new(ds.variant_ids().to_vec(), ds.beta_x().clone(), ds.se_x().clone(), by, ds.se_y().clone()).unwrap();
        let mut bx = ds.beta_x().clone();
        let mut by2 = ds.beta_y().clone();
        bx.row_mut(3).mapv_inplace(|v| -v);
        by2[3] = -by2[3];
        let flipped = SummaryDataset::new(ds.variant_ids().to_vec(), bx, ds.se_x().clone(), by2, ds.se_y().clone()).unwrap();
        let a = mvmr_ivw(&ds, Dispersion::RandomEffects).unwrap();
        let b = mvmr_ivw(&flipped, Dispersion::RandomEffects).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.std_errors, b.std_errors);
    }

    #[test]
    fn q_single_term() {
        let ds = SummaryDataset::without_exposure_se(
            vec!["a".into(), "b".into()],
            array![[1.0], [2.0]],
            array![3.0, 2.0],
            array![2.0, 1.0],
        )
        .unwrap();
        // residual of the first variant at θ = 1 is 2, σ = 2
        assert_eq!(q_statistic(&ds, &[1.0], &[0]).unwrap(), 1.0);
        assert!(q_statistic(&exact(&[0.2, 0.1, 0.3, 0.4]), &[0.2, 0.1, 0.3, 0.4], &[0, 1, 2]).unwrap() < 1e-24);
        assert!(q_statistic(&ds, &[1.0], &[]).is_err());
    }
}
