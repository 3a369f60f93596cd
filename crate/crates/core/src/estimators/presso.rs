//! Outlier removal by a leave-one-out residual-sum-of-squares resampling test.

use ndarray::Array1;
use serde::Serialize;

use super::ivw::mvmr_ivw;
use super::result::{Dispersion, EstimationResult, Method};
use crate::data::SummaryDataset;
use crate::error::{MvmrError, Result};
use crate::kernels::random::standard_normal;
use crate::kernels::{weighted_least_squares, RandomSource};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct PressoOptions {
    /// Number of simulated residual sums of squares (M).
    pub replicates: usize,
    /// Significance level for the global and per-variant tests.
    pub alpha: f64,
    pub dispersion: Dispersion,
    /// Only test individual variants when the global test rejects.
    pub require_global: bool,
}

impl Default for PressoOptions {
    fn default() -> Self {
        Self {
            replicates: 1000,
            alpha: 0.05,
            dispersion: Dispersion::RandomEffects,
            require_global: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierReport<T> {
    pub variant_ids: Vec<String>,
    /// Observed leave-one-out contribution σ_Yj^{-2}(β̂_Yj − β̂_Xj·θ̂_{−j})².
    pub observed_rss: Vec<T>,
    /// Fraction of simulated contributions exceeding the observed one.
    pub empirical_p: Vec<f64>,
    /// `min(1, p · empirical_p)`.
    pub adjusted_p: Vec<f64>,
    pub outlier: Vec<bool>,
    pub rss_obs: T,
    pub global_p: f64,
    pub replicates: usize,
}

impl<T> OutlierReport<T> {
    pub fn outlier_ids(&self) -> Vec<String> {
        self.variant_ids
            .iter()
            .zip(&self.outlier)
            .filter(|(_, &o)| o)
            .map(|(id, _)| id.clone())
            .collect()
    }
}

/// Leave-one-out IVW fitted values β̂_Xj·θ̂_{−j}.
fn leave_one_out_fitted<T: Real>(ds: &SummaryDataset<T>) -> Result<(Vec<Array1<T>>, Vec<T>)> {
    let p = ds.n_variants();
    let w = ds.weights();
    let mut thetas = Vec::with_capacity(p);
    let mut fitted = Vec::with_capacity(p);
    let mut keep: Vec<usize> = Vec::with_capacity(p - 1);
    for j in 0..p {
        keep.clear();
        keep.extend((0..p).filter(|&i| i != j));
        let bx = ds.beta_x().select(ndarray::Axis(0), &keep);
        let by = ds.beta_y().select(ndarray::Axis(0), &keep);
        let ww = w.select(ndarray::Axis(0), &keep);
        let theta = weighted_least_squares(bx.view(), by.view(), ww.view())?.coefficients;
        fitted.push(ds.beta_x().row(j).dot(&theta));
        thetas.push(theta);
    }
    Ok((thetas, fitted))
}

/// Runs the global and per-variant outlier tests, removes flagged variants and
/// refits IVW. With no outliers the result is exactly `mvmr_ivw(ds)`.
///
/// Notes: `global_p`, `n_outliers`.
pub fn mvmr_presso<T: Real>(
    ds: &SummaryDataset<T>,
    opts: &PressoOptions,
    rs: RandomSource,
) -> Result<(EstimationResult<T>, OutlierReport<T>)> {
    let (p, k) = (ds.n_variants(), ds.n_risk_factors());
    if p <= k + 1 {
        return Err(MvmrError::Model(format!("PRESSO needs p > K + 1 (p = {p}, K = {k})")));
    }
    if opts.replicates < 100 {
        return Err(MvmrError::Argument(format!(
            "PRESSO needs at least 100 replicates, got {}",
            opts.replicates
        )));
    }
    let (thetas, fitted) = leave_one_out_fitted(ds)?;
    let w = ds.weights();
    let observed: Vec<T> = (0..p)
        .map(|j| {
            let r = ds.beta_y()[j] - fitted[j];
            w[j] * r * r
        })
        .collect();
    let rss_obs: T = observed.iter().copied().sum();

    let mut exceed = vec![0usize; p];
    let mut global_exceed = 0usize;
    for m in 0..opts.replicates {
        let mut rng = rs.substream(m as u64).rng();
        let mut rss = T::zero();
        for j in 0..p {
            let mut fx = T::zero();
            for c in 0..k {
                let z = T::lit(standard_normal(&mut rng));
                let bx = ds.beta_x()[[j, c]] + ds.se_x()[[j, c]] * z;
                fx += bx * thetas[j][c];
            }
            let z = T::lit(standard_normal(&mut rng));
            let by = fitted[j] + ds.se_y()[j] * z;
            let r = by - fx;
            let e = w[j] * r * r;
            if e > observed[j] {
                exceed[j] += 1;
            }
            rss += e;
        }
        if rss > rss_obs {
            global_exceed += 1;
        }
    }
    let m = opts.replicates as f64;
    let global_p = global_exceed as f64 / m;
    let empirical_p: Vec<f64> = exceed.iter().map(|&e| e as f64 / m).collect();
    let adjusted_p: Vec<f64> = empirical_p.iter().map(|&q| (q * p as f64).min(1.0)).collect();
    let test_variants = !opts.require_global || global_p < opts.alpha;
    let outlier: Vec<bool> = adjusted_p.iter().map(|&q| test_variants && q < opts.alpha).collect();
    let report = OutlierReport {
        variant_ids: ds.variant_ids().to_vec(),
        observed_rss: observed,
        empirical_p,
        adjusted_p,
        outlier,
        rss_obs,
        global_p,
        replicates: opts.replicates,
    };

    let keep: Vec<usize> = (0..p).filter(|&j| !report.outlier[j]).collect();
    let n_out = p - keep.len();
    let result = if n_out == 0 {
        mvmr_ivw(ds, opts.dispersion)?
    } else {
        if keep.len() <= k {
            return Err(MvmrError::Degenerate(format!(
                "{n_out} of {p} variants flagged as outliers; too few remain for K = {k}"
            )));
        }
        mvmr_ivw(&ds.select(&keep)?, opts.dispersion)?
    };
    let result = result
        .with_method(Method::Presso)
        .note("global_p", T::lit(global_p))
        .note("n_outliers", T::from_usize_lossy(n_out));
    Ok((result, report))
}
