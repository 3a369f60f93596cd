use std::io::Write;

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::generate::{draw_parameters, make_summary_dataset_with, parameter_stream};
use crate::error::{MvmrError, Result};
use crate::estimators::{estimate, EstimatorConfig, Method};
use crate::kernels::RandomSource;
use crate::stats::{mean_sd, Z_975};

const METHOD_STREAM: u64 = 3;

/// Monte Carlo summary of one method's estimates of θ_target.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: u8,
    pub prop_invalid: f64,
    pub method: Method,
    /// 0-based risk factor.
    pub target_k: usize,
    pub truth: f64,
    pub mean: f64,
    /// `None` with fewer than two successful replications.
    pub sd: Option<f64>,
    pub mean_se: f64,
    /// Fraction with |estimate / SE| > z_0.975.
    pub rejection: f64,
    /// Mean of (estimate − truth)².
    pub mse: f64,
    pub log_mse: f64,
    pub n_ok: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub rows: Vec<MetricsRow>,
    /// `draws[m][r]`: (estimate, SE) of method `m` in replication `r`, `None` on failure.
    pub draws: Vec<Vec<Option<(f64, f64)>>>,
}

/// One replication: fresh (or fixed) parameters, summary data, every method.
pub fn replicate(
    cfg: &ScenarioConfig,
    fixed: Option<&super::generate::ScenarioParameters>,
    methods: &[Method],
    target_k: usize,
    est: &EstimatorConfig,
    rep: usize,
) -> Vec<Option<(f64, f64)>> {
    let rs = RandomSource { seed: cfg.seed, stream: rep as u64 };
    let owned;
    let par = match fixed {
        Some(p) => p,
        None => {
            owned = draw_parameters(cfg, parameter_stream(rs));
            &owned
        }
    };
    let ds = match make_summary_dataset_with(cfg, par, rs) {
        Ok(ds) => ds,
        Err(_) => return vec![None; methods.len()],
    };
    methods
        .iter()
        .map(|&m| {
            let r = estimate(&ds, m, target_k, est, rs.substream(METHOD_STREAM)).ok()?;
            let (e, s) = (r.estimates[target_k], r.std_errors[target_k]);
            (e.is_finite() && s.is_finite()).then_some((e, s))
        })
        .collect()
}

pub fn run_study(cfg: &ScenarioConfig, methods: &[Method], target_k: usize) -> Result<StudyOutput> {
    run_study_with(cfg, methods, target_k, &EstimatorConfig::default())
}

/// Replications run in parallel; aggregation folds them in replication order,
/// so the output does not depend on the number of threads.
pub fn run_study_with(
    cfg: &ScenarioConfig,
    methods: &[Method],
    target_k: usize,
    est: &EstimatorConfig,
) -> Result<StudyOutput> {
    cfg.validate()?;
    if methods.is_empty() {
        return Err(MvmrError::Argument("no methods given".into()));
    }
    if target_k >= cfg.k {
        return Err(MvmrError::Argument(format!(
            "target risk factor {} out of range for K = {}",
            target_k + 1,
            cfg.k
        )));
    }
    let fixed = (!cfg.redraw_parameters).then(|| draw_parameters(cfg, parameter_stream(RandomSource::new(cfg.seed))));
    let per_rep: Vec<Vec<Option<(f64, f64)>>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| replicate(cfg, fixed.as_ref(), methods, target_k, est, rep))
        .collect();
    let draws: Vec<Vec<Option<(f64, f64)>>> = (0..methods.len())
        .map(|m| per_rep.iter().map(|r| r[m]).collect())
        .collect();
    let truth = cfg.theta[target_k];
    let rows = methods
        .iter()
        .zip(&draws)
        .map(|(&method, d)| summarize(cfg, method, target_k, truth, d))
        .collect();
    Ok(StudyOutput { rows, draws })
}

fn summarize(cfg: &ScenarioConfig, method: Method, target_k: usize, truth: f64, d: &[Option<(f64, f64)>]) -> MetricsRow {
    let ok: Vec<(f64, f64)> = d.iter().flatten().copied().collect();
    let n = ok.len() as f64;
    let est: Vec<f64> = ok.iter().map(|e| e.0).collect();
    let (mean, sd) = mean_sd(&est);
    let mean_se = ok.iter().map(|e| e.1).sum::<f64>() / n;
    let rejection = ok.iter().filter(|(e, s)| (e / s).abs() > Z_975).count() as f64 / n;
    let mse = est.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / n;
    MetricsRow {
        scenario: cfg.scenario_id(),
        prop_invalid: cfg.prop_invalid,
        method,
        target_k,
        truth,
        mean,
        sd,
        mean_se,
        rejection,
        mse,
        log_mse: mse.ln(),
        n_ok: ok.len(),
        failures: d.len() - ok.len(),
    }
}

pub const METRICS_HEADER: [&str; 9] =
    ["scenario", "prop_invalid", "method", "mean", "sd", "mean_se", "rejection", "mse", "log_mse"];

/// Absent SDs are written as `NA`.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.to_string(),
            r.prop_invalid.to_string(),
            r.method.tag().to_string(),
            r.mean.to_string(),
            r.sd.map_or_else(|| "NA".to_string(), |s| s.to_string()),
            r.mean_se.to_string(),
            r.rejection.to_string(),
            r.mse.to_string(),
            r.log_mse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Wide table: one line per (scenario, prop_invalid), one log-MSE column per method.
pub fn write_log_mse_table<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut methods: Vec<Method> = Vec::new();
    let mut cells: Vec<(u8, f64)> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
        if !cells.contains(&(r.scenario, r.prop_invalid)) {
            cells.push((r.scenario, r.prop_invalid));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["scenario".to_string(), "prop_invalid".to_string()];
    header.extend(methods.iter().map(|m| m.tag().to_string()));
    w.write_record(&header)?;
    for (s, q) in cells {
        let mut rec = vec![s.to_string(), q.to_string()];
        for m in &methods {
            let v = rows
                .iter()
                .find(|r| r.scenario == s && r.prop_invalid == q && r.method == *m)
                .map_or_else(|| "NA".to_string(), |r| r.log_mse.to_string());
            rec.push(v);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `method,replications,failures`
pub fn write_failures_csv<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "replications", "failures"])?;
    for r in rows {
        w.write_record([r.method.tag().to_string(), (r.n_ok + r.failures).to_string(), r.failures.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
