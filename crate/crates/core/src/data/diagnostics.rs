//! Plot-ready residual and association tables.

use std::collections::HashSet;
use std::io::Write;

use super::SummaryDataset;
use crate::error::{MvmrError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow<T> {
    pub variant_id: String,
    pub fitted: T,
    pub residual: T,
    /// Error-bar half-width (σ_Yj).
    pub se_y: T,
    /// Excluded or identified as pleiotropic by some method.
    pub flag: bool,
}

/// Residuals vs fitted values for a set of causal-effect estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsTable<T> {
    pub rows: Vec<DiagnosticsRow<T>>,
}

impl<T: Real> DiagnosticsTable<T> {
    /// Sets the flag on every row whose id is in `ids`; other flags are untouched.
    pub fn flag_variants<S: AsRef<str>>(&mut self, ids: &[S]) {
        let set: HashSet<&str> = ids.iter().map(|s| s.as_ref()).collect();
        for row in &mut self.rows {
            if set.contains(row.variant_id.as_str()) {
                row.flag = true;
            }
        }
    }

    /// `variant_id,fitted,residual,se_y,flag` with flag encoded as 0/1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["variant_id", "fitted", "residual", "se_y", "flag"])?;
        for r in &self.rows {
            w.write_record([
                r.variant_id.clone(),
                r.fitted.to_string(),
                r.residual.to_string(),
                r.se_y.to_string(),
                u8::from(r.flag).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fitted values Σ_k β̂_Xjk θ̂_k and residuals β̂_Yj − fitted for every variant.
pub fn residual_diagnostics<T: Real>(
    ds: &SummaryDataset<T>,
    estimates: &[T],
) -> Result<DiagnosticsTable<T>> {
    let k = ds.n_risk_factors();
    if estimates.len() != k {
        return Err(MvmrError::Argument(format!(
            "expected {k} estimates, got {}",
            estimates.len()
        )));
    }
    let rows = (0..ds.n_variants())
        .map(|j| {
            let fitted = (0..k).fold(T::zero(), |acc, c| acc + ds.beta_x()[[j, c]] * estimates[c]);
            let y = ds.beta_y()[j];
            DiagnosticsRow {
                variant_id: ds.variant_ids()[j].clone(),
                fitted,
                // fitted + residual reproduces y up to one rounding
                residual: y - fitted,
                se_y: ds.se_y()[j],
                flag: false,
            }
        })
        .collect();
    Ok(DiagnosticsTable { rows })
}

/// Associations with two risk factors, for pairwise scatter plots.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScatter<T> {
    /// 0-based risk-factor indices, `first < second`.
    pub first: usize,
    pub second: usize,
    pub variant_ids: Vec<String>,
    pub beta_first: Vec<T>,
    pub beta_second: Vec<T>,
    pub se_first: Vec<T>,
    pub se_second: Vec<T>,
}

impl<T: Real> PairScatter<T> {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let (a, b) = (self.first + 1, self.second + 1);
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "variant_id".to_string(),
            format!("beta_x_{a}"),
            format!("beta_x_{b}"),
            format!("se_x_{a}"),
            format!("se_x_{b}"),
        ])?;
        for j in 0..self.variant_ids.len() {
            w.write_record([
                self.variant_ids[j].clone(),
                self.beta_first[j].to_string(),
                self.beta_second[j].to_string(),
                self.se_first[j].to_string(),
                self.se_second[j].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// All K(K−1)/2 risk-factor pairs, in lexicographic order.
pub fn pairwise_associations<T: Real>(ds: &SummaryDataset<T>) -> Vec<PairScatter<T>> {
    let k = ds.n_risk_factors();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for a in 0..k {
        for b in (a + 1)..k {
            out.push(PairScatter {
                first: a,
                second: b,
                variant_ids: ds.variant_ids().to_vec(),
                beta_first: ds.beta_x().column(a).to_vec(),
                beta_second: ds.beta_x().column(b).to_vec(),
                se_first: ds.se_x().column(a).to_vec(),
                se_second: ds.se_x().column(b).to_vec(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ds() -> SummaryDataset<f64> {
        SummaryDataset::without_exposure_se(
            vec!["a".into(), "b".into()],
            array![[1.0], [2.0]],
            array![3.0, 6.0],
            array![1.0, 1.0],
        )
        .unwrap_or_else(|_| unreachable!())
    }

    #[test]
    fn exact_fit_has_zero_residuals() {
        let t = residual_diagnostics(&ds(), &[3.0]).unwrap();
        let fitted: Vec<f64> = t.rows.iter().map(|r| r.fitted).collect();
        let resid: Vec<f64> = t.rows.iter().map(|r| r.residual).collect();
        assert_eq!(fitted, vec![3.0, 6.0]);
        assert_eq!(resid, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_estimate_returns_outcome() {
        let t = residual_diagnostics(&ds(), &[0.0]).unwrap();
        let resid: Vec<f64> = t.rows.iter().map(|r| r.residual).collect();
        assert_eq!(resid, vec![3.0, 6.0]);
        assert!(residual_diagnostics(&ds(), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn flags_and_csv() {
        let mut t = residual_diagnostics(&ds(), &[2.0]).unwrap();
        t.flag_variants(&["b"]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "variant_id,fitted,residual,se_y,flag\na,2,1,1,0\nb,4,2,1,1\n");
    }
}
