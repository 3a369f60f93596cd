//! Multivariable MR estimators. Each maps a [`SummaryDataset`] to an
//! [`EstimationResult`] for all K risk factors.

mod egger;
mod ivw;
mod lasso;
mod median;
mod presso;
mod result;
mod robust;

pub use egger::mvmr_egger;
pub use ivw::{mvmr_ivw, q_statistic};
pub use lasso::{mvmr_lasso, post_lasso, LassoOptions, LassoSelection, LassoStep};
pub use median::mvmr_median;
pub use presso::{mvmr_presso, OutlierReport, PressoOptions};
pub use result::{write_results_csv, Dispersion, EstimationResult, Method, RESULTS_HEADER};
pub use robust::{mvmr_robust, mvmr_robust_with};

use crate::data::SummaryDataset;
use crate::error::Result;
use crate::kernels::{MmOptions, RandomSource};
use crate::scalar::Real;

const PRESSO_STREAM: u64 = 0x5052_4553;
const MEDIAN_STREAM: u64 = 0x4D45_4449;

/// Tuning shared by every method, with the documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub dispersion: Dispersion,
    pub presso: PressoOptions,
    pub median_bootstrap: usize,
    pub lasso: LassoOptions,
    pub mm: MmOptions,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            dispersion: Dispersion::RandomEffects,
            presso: PressoOptions::default(),
            median_bootstrap: 1000,
            lasso: LassoOptions::default(),
            mm: MmOptions::default(),
        }
    }
}

/// Runs one method. `primary` is the 0-based risk factor used for orientation;
/// resampling methods draw from fixed sub-streams of `rs`.
pub fn estimate<T: Real>(
    ds: &SummaryDataset<T>,
    method: Method,
    primary: usize,
    config: &EstimatorConfig,
    rs: RandomSource,
) -> Result<EstimationResult<T>> {
    Ok(estimate_detailed(ds, method, primary, config, rs)?.result)
}

/// Output of [`estimate_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct DetailedEstimate<T> {
    pub result: EstimationResult<T>,
    /// PRESSO only.
    pub outliers: Option<OutlierReport<T>>,
    /// Lasso only.
    pub selection: Option<LassoSelection<T>>,
}

/// Like [`estimate`], also returning the PRESSO outlier report or the lasso selection.
pub fn estimate_detailed<T: Real>(
    ds: &SummaryDataset<T>,
    method: Method,
    primary: usize,
    config: &EstimatorConfig,
    rs: RandomSource,
) -> Result<DetailedEstimate<T>> {
    let plain = |result| DetailedEstimate { result, outliers: None, selection: None };
    match method {
        Method::Ivw => mvmr_ivw(ds, config.dispersion).map(plain),
        Method::Egger => mvmr_egger(ds, primary, config.dispersion).map(plain),
        Method::Presso => {
            let (result, report) = mvmr_presso(ds, &config.presso, rs.substream(PRESSO_STREAM))?;
            Ok(DetailedEstimate { result, outliers: Some(report), selection: None })
        }
        Method::Robust => mvmr_robust_with(ds, &config.mm).map(plain),
        Method::Median => mvmr_median(ds, config.median_bootstrap, rs.substream(MEDIAN_STREAM)).map(plain),
        Method::Lasso => {
            let (result, sel) = mvmr_lasso(ds, primary, &config.lasso)?;
            Ok(DetailedEstimate { result, outliers: None, selection: Some(sel) })
        }
    }
}
