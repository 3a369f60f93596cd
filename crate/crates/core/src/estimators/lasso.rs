//! Penalised per-variant intercepts for variant selection, followed by IVW on
//! the variants whose intercepts are exactly zero.
//!
//! λ is chosen by a heterogeneity stopping rule: walk the grid from λ_max
//! downwards and stop at the first λ whose valid set V_λ has an IVW Q statistic
//! no larger than the (1 − α) chi-square quantile on |V_λ| − K degrees of
//! freedom. If no λ passes, the smallest grid value with |V_λ| > K is used.

use std::collections::HashSet;

use ndarray::Array1;
use serde::Serialize;

use super::ivw::mvmr_ivw;
use super::result::{Dispersion, EstimationResult, Method};
use crate::data::SummaryDataset;
use crate::error::{MvmrError, Result};
use crate::kernels::wls::weighted_rss;
use crate::kernels::{weighted_least_squares, LassoKernel};
use crate::scalar::Real;
use crate::stats::chi_square_quantile;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoOptions {
    /// Explicit descending λ grid; `None` builds a log-spaced grid from λ_max.
    pub grid: Option<Vec<f64>>,
    pub grid_points: usize,
    /// Smallest grid value as a fraction of λ_max.
    pub min_ratio: f64,
    /// Significance level of the heterogeneity stopping rule.
    pub alpha_het: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            grid: None,
            grid_points: 100,
            min_ratio: 0.01,
            alpha_het: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoStep<T> {
    pub lambda: T,
    pub theta0: Vec<T>,
    /// Indices of variants with zero intercept.
    pub valid: Vec<usize>,
    /// IVW heterogeneity on the valid set (absent when |V| ≤ K).
    pub q: Option<T>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoSelection<T> {
    pub lambda_max: T,
    /// Full descending grid.
    pub grid: Vec<T>,
    /// Grid points evaluated, in grid order (the walk stops at the chosen λ).
    pub steps: Vec<LassoStep<T>>,
    pub chosen: usize,
    pub chosen_lambda: T,
    /// Whether the chosen λ satisfied the heterogeneity criterion.
    pub passed_rule: bool,
    pub variant_ids: Vec<String>,
    /// Valid variant ids at the chosen λ.
    pub valid_ids: Vec<String>,
    /// Per-variant pleiotropy flag (non-zero intercept at the chosen λ).
    pub pleiotropic: Vec<bool>,
}

impl<T> LassoSelection<T> {
    pub fn pleiotropic_ids(&self) -> Vec<String> {
        self.variant_ids
            .iter()
            .zip(&self.pleiotropic)
            .filter(|(_, &f)| f)
            .map(|(id, _)| id.clone())
            .collect()
    }
}

fn build_grid<T: Real>(lambda_max: T, opts: &LassoOptions) -> Result<Vec<T>> {
    if let Some(g) = &opts.grid {
        if g.is_empty() {
            return Err(MvmrError::Argument("empty lambda grid".into()));
        }
        if g.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(MvmrError::Argument("lambda grid values must be non-negative".into()));
        }
        if g.windows(2).any(|w| w[1] > w[0]) {
            return Err(MvmrError::Argument("lambda grid must be descending".into()));
        }
        return Ok(g.iter().map(|&l| T::lit(l)).collect());
    }
    if opts.grid_points < 1 || !(opts.min_ratio > 0.0 && opts.min_ratio < 1.0) {
        return Err(MvmrError::Argument("invalid automatic lambda grid".into()));
    }
    if !(lambda_max > T::zero()) {
        return Ok(vec![T::zero()]);
    }
    let n = opts.grid_points;
    if n == 1 {
        return Ok(vec![lambda_max]);
    }
    let lo = opts.min_ratio.ln();
    Ok((0..n)
        .map(|i| {
            let frac = lo * i as f64 / (n - 1) as f64;
            lambda_max * T::lit(frac.exp())
        })
        .collect())
}

/// Orients to `primary`, selects λ by the heterogeneity rule and returns the
/// post-lasso IVW fit (random-effects SEs) on the selected valid variants.
///
/// Notes: `lambda`, `n_pleiotropic`, `rule_passed`.
pub fn mvmr_lasso<T: Real>(
    ds: &SummaryDataset<T>,
    primary: usize,
    opts: &LassoOptions,
) -> Result<(EstimationResult<T>, LassoSelection<T>)> {
    let ds = ds.orient_to_risk_factor(primary)?;
    let (p, k) = (ds.n_variants(), ds.n_risk_factors());
    let kernel = LassoKernel::new(ds.beta_x().view(), ds.beta_y().view(), ds.se_y().view())?;
    let lambda_max = kernel.lambda_max();
    let grid = build_grid(lambda_max, opts)?;
    let w = ds.weights();

    let mut steps: Vec<LassoStep<T>> = Vec::new();
    let mut warm: Option<Array1<T>> = None;
    let mut chosen: Option<usize> = None;
    for (i, &lambda) in grid.iter().enumerate() {
        let fit = kernel.solve(lambda, warm.as_ref())?;
        let valid: Vec<usize> = (0..p).filter(|&j| fit.theta0[j] == T::zero()).collect();
        let (q, threshold) = if valid.len() > k {
            let sel = |a: &ndarray::Array2<T>| a.select(ndarray::Axis(0), &valid);
            let bx = sel(ds.beta_x());
            let by = ds.beta_y().select(ndarray::Axis(0), &valid);
            let ww = w.select(ndarray::Axis(0), &valid);
            match weighted_least_squares(bx.view(), by.view(), ww.view()) {
                Ok(f) => {
                    let q = weighted_rss(&bx.view(), &by.view(), &ww.view(), &f.coefficients);
                    (Some(q), Some(chi_square_quantile(1.0 - opts.alpha_het, valid.len() - k)))
                }
                Err(_) => (None, None),
            }
        } else {
            (None, None)
        };
        let passes = matches!((q, threshold), (Some(q), Some(t)) if q.as_f64() <= t);
        steps.push(LassoStep {
            lambda,
            theta0: fit.theta0.to_vec(),
            valid,
            q,
            threshold,
        });
        warm = Some(fit.theta0);
        if passes {
            chosen = Some(i);
            break;
        }
    }
    let passed_rule = chosen.is_some();
    let chosen = match chosen {
        Some(i) => i,
        None => steps.iter().rposition(|s| s.q.is_some()).ok_or_else(|| {
            MvmrError::Degenerate(format!(
                "lasso selection left at most K = {k} valid variants at every lambda; use a larger lambda"
            ))
        })?,
    };
    let step = &steps[chosen];
    let valid = step.valid.clone();
    let chosen_lambda = step.lambda;
    let valid_set: HashSet<usize> = valid.iter().copied().collect();
    let selection = LassoSelection {
        lambda_max,
        grid: grid.clone(),
        chosen,
        chosen_lambda,
        passed_rule,
        variant_ids: ds.variant_ids().to_vec(),
        valid_ids: valid.iter().map(|&j| ds.variant_ids()[j].clone()).collect(),
        pleiotropic: (0..p).map(|j| !valid_set.contains(&j)).collect(),
        steps,
    };
    let result = post_lasso_on(&ds, &valid)?
        .note("lambda", chosen_lambda)
        .note("n_pleiotropic", T::from_usize_lossy(p - valid.len()))
        .note("rule_passed", if passed_rule { T::one() } else { T::zero() });
    Ok((result, selection))
}

fn post_lasso_on<T: Real>(ds: &SummaryDataset<T>, valid: &[usize]) -> Result<EstimationResult<T>> {
    let k = ds.n_risk_factors();
    if valid.len() <= k {
        return Err(MvmrError::Degenerate(format!(
            "only {} valid variants for K = {k}; use a larger lambda",
            valid.len()
        )));
    }
    let sub = if valid.len() == ds.n_variants() { ds.clone() } else { ds.select(valid)? };
    Ok(mvmr_ivw(&sub, Dispersion::RandomEffects)?.with_method(Method::Lasso))
}

/// Post-lasso IVW on a separate dataset using a selection made elsewhere
/// (three-sample use). Variants are matched by id; the estimation data is
/// oriented to `primary` first.
pub fn post_lasso<T: Real>(
    estimation: &SummaryDataset<T>,
    selection: &LassoSelection<T>,
    primary: usize,
) -> Result<EstimationResult<T>> {
    let ds = estimation.orient_to_risk_factor(primary)?;
    let valid: Vec<usize> = selection
        .valid_ids
        .iter()
        .filter_map(|id| ds.position(id))
        .collect();
    Ok(post_lasso_on(&ds, &valid)?
        .note("lambda", selection.chosen_lambda)
        .note("n_pleiotropic", T::from_usize_lossy(ds.n_variants() - valid.len())))
}
