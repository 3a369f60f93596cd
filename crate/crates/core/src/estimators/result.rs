use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{MvmrError, Result};
use crate::scalar::Real;
use crate::stats::{two_sided_p, Z_975};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ivw,
    Egger,
    Presso,
    Robust,
    Median,
    Lasso,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ivw,
        Method::Egger,
        Method::Presso,
        Method::Robust,
        Method::Median,
        Method::Lasso,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Ivw => "ivw",
            Method::Egger => "egger",
            Method::Presso => "presso",
            Method::Robust => "robust",
            Method::Median => "median",
            Method::Lasso => "lasso",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Method::Ivw => "MVMR-IVW",
            Method::Egger => "MVMR-Egger",
            Method::Presso => "MVMR-PRESSO",
            Method::Robust => "MVMR-Robust",
            Method::Median => "MVMR-Median",
            Method::Lasso => "MVMR-Lasso",
        }
    }

    /// Parses a comma-separated list; `all` expands to every method.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(Method::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.dedup();
        if out.is_empty() {
            return Err(MvmrError::Argument("no methods given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = MvmrError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s) || m.display_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| MvmrError::Argument(format!("unknown method `{s}`")))
    }
}

/// Residual dispersion applied to least-squares standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// Scale fixed at 1.
    Fixed,
    /// Covariance multiplied by `max(1, Q / df)`.
    #[default]
    RandomEffects,
}

impl Dispersion {
    pub fn factor<T: Real>(self, q: T, df: usize) -> T {
        match self {
            Dispersion::Fixed => T::one(),
            Dispersion::RandomEffects => {
                if df == 0 {
                    T::one()
                } else {
                    (q / T::from_usize_lossy(df)).max(T::one())
                }
            }
        }
    }
}

/// Per-risk-factor causal-effect estimates from one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult<T> {
    pub method: Method,
    pub estimates: Vec<T>,
    pub std_errors: Vec<T>,
    pub ci_lower: Vec<T>,
    pub ci_upper: Vec<T>,
    pub p_values: Vec<T>,
    pub variants_used: Vec<String>,
    /// Heterogeneity statistic of the final fit, where defined.
    pub q_statistic: Option<T>,
    /// Method-specific extras (intercepts, global test p-values, λ, scale).
    pub notes: BTreeMap<String, T>,
}

impl<T: Real> EstimationResult<T> {
    /// Fills in normal-theory intervals and p-values from estimates and SEs.
    pub fn from_estimates(
        method: Method,
        estimates: Vec<T>,
        std_errors: Vec<T>,
        variants_used: Vec<String>,
        q_statistic: Option<T>,
    ) -> Self {
        let z = T::lit(Z_975);
        let ci_lower = estimates.iter().zip(&std_errors).map(|(&e, &s)| e - z * s).collect();
        let ci_upper = estimates.iter().zip(&std_errors).map(|(&e, &s)| e + z * s).collect();
        let p_values = estimates
            .iter()
            .zip(&std_errors)
            .map(|(&e, &s)| {
                if s == T::zero() {
                    if e == T::zero() { T::one() } else { T::zero() }
                } else {
                    T::lit(two_sided_p((e / s).as_f64()))
                }
            })
            .collect();
        Self {
            method,
            estimates,
            std_errors,
            ci_lower,
            ci_upper,
            p_values,
            variants_used,
            q_statistic,
            notes: BTreeMap::new(),
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn note(mut self, key: &str, value: T) -> Self {
        self.notes.insert(key.to_string(), value);
        self
    }

    pub fn n_risk_factors(&self) -> usize {
        self.estimates.len()
    }
}

pub const RESULTS_HEADER: [&str; 8] =
    ["method", "risk_factor", "estimate", "se", "ci_lower", "ci_upper", "p_value", "n_variants"];

/// One row per (method, risk factor); `risk_factor` is 1-based.
pub fn write_results_csv<T: Real, W: Write>(results: &[EstimationResult<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER)?;
    for r in results {
        for k in 0..r.n_risk_factors() {
            w.write_record([
                r.method.tag().to_string(),
                (k + 1).to_string(),
                r.estimates[k].to_string(),
                r.std_errors[k].to_string(),
                r.ci_lower[k].to_string(),
                r.ci_upper[k].to_string(),
                r.p_values[k].to_string(),
                r.variants_used.len().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
