//! Summary-statistics data model: per-variant associations with K risk factors
//! and one outcome, variant orientation, and residual diagnostics.

mod diagnostics;
mod io;

pub use diagnostics::{
    pairwise_associations, residual_diagnostics, DiagnosticsRow, DiagnosticsTable, PairScatter,
};
pub use io::{load_summary_csv, read_summary_csv, write_summary_csv, write_summary_csv_to};

use std::collections::HashSet;

use ndarray::{Array1, Array2, Axis};

use crate::error::{MvmrError, Result};
use crate::linalg::singular_values;
use crate::scalar::Real;

/// Smallest admissible ratio of extreme singular values of the σ_Y-weighted design.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Variant–risk-factor and variant–outcome association estimates with their
/// standard errors. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryDataset<T> {
    variant_ids: Vec<String>,
    beta_x: Array2<T>,
    se_x: Array2<T>,
    beta_y: Array1<T>,
    se_y: Array1<T>,
}

impl<T: Real> SummaryDataset<T> {
    /// Builds and validates a dataset.
    ///
    /// Requires `p > K`, unique ids, finite values, `se_y > 0`, `se_x >= 0` and a
    /// σ_Y-weighted design of full column rank.
    pub fn new(
        variant_ids: Vec<String>,
        beta_x: Array2<T>,
        se_x: Array2<T>,
        beta_y: Array1<T>,
        se_y: Array1<T>,
    ) -> Result<Self> {
        let ds = Self::from_parts_unchecked(variant_ids, beta_x, se_x, beta_y, se_y)?;
        ds.check_values()?;
        ds.check_rank()?;
        Ok(ds)
    }

    /// Shape checks only; used for subsets that may legitimately have p ≤ K.
    pub(crate) fn from_parts_unchecked(
        variant_ids: Vec<String>,
        beta_x: Array2<T>,
        se_x: Array2<T>,
        beta_y: Array1<T>,
        se_y: Array1<T>,
    ) -> Result<Self> {
        let p = variant_ids.len();
        let k = beta_x.ncols();
        if beta_x.nrows() != p || se_x.dim() != (p, k) || beta_y.len() != p || se_y.len() != p {
            return Err(MvmrError::Invalid(format!(
                "dimension mismatch: {} ids, beta_x {:?}, se_x {:?}, beta_y {}, se_y {}",
                p,
                beta_x.dim(),
                se_x.dim(),
                beta_y.len(),
                se_y.len()
            )));
        }
        if k == 0 {
            return Err(MvmrError::Invalid("at least one risk factor is required".into()));
        }
        Ok(Self {
            variant_ids,
            beta_x,
            se_x,
            beta_y,
            se_y,
        })
    }

    /// Convenience constructor for NOME data (all `se_x` zero).
    pub fn without_exposure_se(
        variant_ids: Vec<String>,
        beta_x: Array2<T>,
        beta_y: Array1<T>,
        se_y: Array1<T>,
    ) -> Result<Self> {
        let se_x = Array2::zeros(beta_x.dim());
        Self::new(variant_ids, beta_x, se_x, beta_y, se_y)
    }

    fn check_values(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.variant_ids.len());
        for id in &self.variant_ids {
            if !seen.insert(id.as_str()) {
                return Err(MvmrError::Invalid(format!("duplicate variant id `{id}`")));
            }
        }
        let (p, k) = self.beta_x.dim();
        if p <= k {
            return Err(MvmrError::Model(format!(
                "need more variants than risk factors (p = {p}, K = {k})"
            )));
        }
        for j in 0..p {
            if !(self.se_y[j] > T::zero()) || !self.se_y[j].is_finite() {
                return Err(MvmrError::Model(format!(
                    "non-positive outcome standard error, variant `{}`",
                    self.variant_ids[j]
                )));
            }
            if !self.beta_y[j].is_finite() {
                return Err(MvmrError::Model(format!(
                    "non-finite outcome association, variant `{}`",
                    self.variant_ids[j]
                )));
            }
            for c in 0..k {
                if !self.beta_x[[j, c]].is_finite() {
                    return Err(MvmrError::Model(format!(
                        "non-finite risk-factor association, variant `{}`",
                        self.variant_ids[j]
                    )));
                }
                let s = self.se_x[[j, c]];
                if !(s >= T::zero()) || !s.is_finite() {
                    return Err(MvmrError::Model(format!(
                        "negative risk-factor standard error, variant `{}`",
                        self.variant_ids[j]
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_rank(&self) -> Result<()> {
        let design = self.weighted_design();
        let sv = singular_values(design.view());
        let largest = sv[0];
        let smallest = *sv.last().unwrap();
        if !(largest > T::zero()) || !(smallest > T::lit(RANK_TOLERANCE) * largest) {
            return Err(MvmrError::Model(format!(
                "risk-factor associations are rank deficient (singular value ratio {:e})",
                if largest > T::zero() { (smallest / largest).as_f64() } else { 0.0 }
            )));
        }
        Ok(())
    }

    /// Rows of `beta_x` divided by `se_y`.
    pub fn weighted_design(&self) -> Array2<T> {
        let mut d = self.beta_x.clone();
        for (mut row, &s) in d.axis_iter_mut(Axis(0)).zip(self.se_y.iter()) {
            row.mapv_inplace(|v| v / s);
        }
        d
    }

    /// Inverse-variance weights σ_Yj^{-2}.
    pub fn weights(&self) -> Array1<T> {
        self.se_y.mapv(|s| T::one() / (s * s))
    }

    pub fn n_variants(&self) -> usize {
        self.variant_ids.len()
    }

    pub fn n_risk_factors(&self) -> usize {
        self.beta_x.ncols()
    }

    pub fn variant_ids(&self) -> &[String] {
        &self.variant_ids
    }

    pub fn beta_x(&self) -> &Array2<T> {
        &self.beta_x
    }

    pub fn se_x(&self) -> &Array2<T> {
        &self.se_x
    }

    pub fn beta_y(&self) -> &Array1<T> {
        &self.beta_y
    }

    pub fn se_y(&self) -> &Array1<T> {
        &self.se_y
    }

    /// Rows at `indices`, in the given order, re-validated as a full dataset.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let sub = self.select_unchecked(indices)?;
        sub.check_values()?;
        sub.check_rank()?;
        Ok(sub)
    }

    pub(crate) fn select_unchecked(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_variants()) {
            return Err(MvmrError::Argument(format!("variant index {bad} out of range")));
        }
        Self::from_parts_unchecked(
            indices.iter().map(|&i| self.variant_ids[i].clone()).collect(),
            self.beta_x.select(Axis(0), indices),
            self.se_x.select(Axis(0), indices),
            self.beta_y.select(Axis(0), indices),
            self.se_y.select(Axis(0), indices),
        )
    }

    /// Index of a variant id.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.variant_ids.iter().position(|v| v == id)
    }

    /// Flips every variant whose association with risk factor `k` (0-based) is
    /// negative so that it becomes positive. The whole `beta_x` row and `beta_y`
    /// change sign; standard errors do not. Rows with an exactly zero association
    /// are left as they are.
    pub fn orient_to_risk_factor(&self, k: usize) -> Result<Self> {
        if k >= self.n_risk_factors() {
            return Err(MvmrError::Argument(format!(
                "risk factor index {} out of range (K = {})",
                k + 1,
                self.n_risk_factors()
            )));
        }
        let mut out = self.clone();
        for j in 0..out.n_variants() {
            if out.beta_x[[j, k]] < T::zero() {
                out.beta_x.row_mut(j).mapv_inplace(|v| -v);
                out.beta_y[j] = -out.beta_y[j];
            }
        }
        Ok(out)
    }
}
