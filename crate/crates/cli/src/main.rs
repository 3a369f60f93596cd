//! `mvmr`: estimation, diagnostics and Monte Carlo runs from the command line.

mod manifest;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mvmr::data::{load_summary_csv, pairwise_associations, residual_diagnostics};
use mvmr::estimators::{mvmr_ivw, post_lasso, write_results_csv, Dispersion, LassoSelection, OutlierReport};
use mvmr::simulation::{
    run_study_with, write_failures_csv, write_log_mse_table, write_metrics_csv, ScenarioConfig, ThetaSet, Variant,
};
use mvmr::{estimate_detailed, Dataset, DetailedEstimate, Estimate, EstimatorConfig, Method, MvmrError, RandomSource};

use manifest::Manifest;

const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "mvmr", version, about = "Pleiotropy-robust multivariable Mendelian randomization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one or more estimators to a summary-statistics CSV.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo study for one scenario cell.
    Simulate(SimulateArgs),
    /// Write residual-vs-fitted and pairwise association tables for plotting.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory (created if missing).
    #[arg(long, default_value = "mvmr-out")]
    out: PathBuf,
    /// Seed for resampling methods and simulations.
    #[arg(long)]
    seed: Option<u64>,
    /// Refuse to run seeded procedures without an explicit --seed.
    #[arg(long)]
    strict: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args, Debug)]
struct Tuning {
    /// Use fixed-effect instead of multiplicative random-effects SEs for IVW, Egger and PRESSO.
    #[arg(long)]
    fixed_effect: bool,
    /// PRESSO simulated residual sums of squares (M).
    #[arg(long, default_value_t = 1000)]
    presso_reps: usize,
    /// PRESSO significance level.
    #[arg(long, default_value_t = 0.05)]
    presso_alpha: f64,
    /// Median bootstrap replicates (B).
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    /// Lasso heterogeneity stopping-rule significance level.
    #[arg(long, default_value_t = 0.05)]
    lasso_alpha: f64,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Summary-statistics CSV: variant_id,beta_x_1..K,se_x_1..K,beta_y,se_y.
    #[arg(long)]
    input: PathBuf,
    /// Number of risk factors K.
    #[arg(long)]
    k: usize,
    /// Comma-separated methods: ivw,egger,presso,robust,median,lasso or all.
    #[arg(long, default_value = "all")]
    methods: String,
    /// Primary risk factor (1-based) used to orient variants.
    #[arg(long, default_value_t = 1)]
    primary: usize,
    /// Separate dataset for lasso variant selection; post-lasso estimation uses --input.
    #[arg(long)]
    selection_input: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Pleiotropy scenario: 1 balanced, 2 directional, 3 via the confounder.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    scenario: u8,
    /// Proportion of invalid variants.
    #[arg(long)]
    prop_invalid: f64,
    /// Causal-effect set: A = (0.2, 0.1, 0.3, 0.4), B = (0, -0.1, 0.1, 0.2).
    #[arg(long)]
    theta_set: String,
    /// base, p20, corr or one-sample.
    #[arg(long, default_value = "base")]
    variant: String,
    /// Replications (default 1000).
    #[arg(long)]
    reps: Option<usize>,
    /// Risk factor (1-based) whose estimates are summarised.
    #[arg(long, default_value_t = 1)]
    target_k: usize,
    /// Comma-separated methods or all.
    #[arg(long, default_value = "all")]
    methods: String,
    /// `key = value` file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Draw variant parameters once per study instead of once per replication.
    #[arg(long)]
    fixed_parameters: bool,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    /// Method whose estimates give the fitted values.
    #[arg(long, default_value = "ivw")]
    method: String,
    /// Primary risk factor (1-based).
    #[arg(long, default_value_t = 1)]
    primary: usize,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    tuning: Tuning,
}

/// Usage and input-validation failures (exit 2).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Input errors are the caller's to fix; everything else is a run failure.
fn classify(e: MvmrError) -> anyhow::Error {
    match e {
        MvmrError::Parse { .. } | MvmrError::Invalid(_) | MvmrError::Model(_) | MvmrError::Argument(_) => {
            usage(e.to_string())
        }
        other => other.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn index_arg(name: &str, value: usize, k: usize) -> anyhow::Result<usize> {
    if value == 0 || value > k {
        bail!(usage(format!("--{name} must be between 1 and {k}, got {value}")));
    }
    Ok(value - 1)
}

fn resolve_seed(common: &Common, needed: bool) -> anyhow::Result<u64> {
    match common.seed {
        Some(s) => Ok(s),
        None if common.strict && needed => bail!(usage("--strict requires --seed for resampling methods and simulations")),
        None => Ok(DEFAULT_SEED),
    }
}

fn estimator_config(t: &Tuning) -> anyhow::Result<EstimatorConfig> {
    let mut cfg = EstimatorConfig::default();
    if t.fixed_effect {
        cfg.dispersion = Dispersion::Fixed;
    }
    cfg.presso.dispersion = cfg.dispersion;
    cfg.presso.replicates = t.presso_reps;
    cfg.presso.alpha = t.presso_alpha;
    cfg.median_bootstrap = t.bootstrap;
    cfg.lasso.alpha_het = t.lasso_alpha;
    for (name, v) in [("presso-alpha", t.presso_alpha), ("lasso-alpha", t.lasso_alpha)] {
        if !(v > 0.0 && v < 1.0) {
            bail!(usage(format!("--{name} must lie in (0, 1), got {v}")));
        }
    }
    if t.presso_reps < 100 || t.bootstrap < 100 {
        bail!(usage("--presso-reps and --bootstrap must be at least 100"));
    }
    Ok(cfg)
}

fn tuning_params(t: &Tuning, params: &mut BTreeMap<String, String>) {
    params.insert("fixed_effect".into(), t.fixed_effect.to_string());
    params.insert("presso_reps".into(), t.presso_reps.to_string());
    params.insert("presso_alpha".into(), t.presso_alpha.to_string());
    params.insert("bootstrap".into(), t.bootstrap.to_string());
    params.insert("lasso_alpha".into(), t.lasso_alpha.to_string());
}

fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load(path: &Path, k: usize) -> anyhow::Result<Dataset> {
    if k == 0 {
        bail!(usage("--k must be at least 1"));
    }
    load_summary_csv(path, k).map_err(|e| match e {
        MvmrError::Io(m) => usage(m),
        other => classify(other),
    })
    .with_context(|| format!("reading {}", path.display()))
}

fn write_lasso_selection(dir: &Path, sel: &LassoSelection<f64>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, "lasso_selection.csv")?);
    w.write_record(["variant_id", "theta0", "pleiotropic"])?;
    let theta0 = &sel.steps[sel.chosen].theta0;
    for (j, id) in sel.variant_ids.iter().enumerate() {
        w.write_record([id.clone(), theta0[j].to_string(), u8::from(sel.pleiotropic[j]).to_string()])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(dir, "lasso_path.csv")?);
    w.write_record(["lambda", "n_valid", "q", "threshold", "chosen"])?;
    for (i, s) in sel.steps.iter().enumerate() {
        w.write_record([
            s.lambda.to_string(),
            s.valid.len().to_string(),
            s.q.map_or_else(|| "NA".into(), |q| q.to_string()),
            s.threshold.map_or_else(|| "NA".into(), |t| t.to_string()),
            u8::from(i == sel.chosen).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_outliers(dir: &Path, rep: &OutlierReport<f64>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, "presso_outliers.csv")?);
    w.write_record(["variant_id", "observed_rss", "empirical_p", "adjusted_p", "outlier"])?;
    for j in 0..rep.variant_ids.len() {
        w.write_record([
            rep.variant_ids[j].clone(),
            rep.observed_rss[j].to_string(),
            rep.empirical_p[j].to_string(),
            rep.adjusted_p[j].to_string(),
            u8::from(rep.outlier[j]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One method; in three-sample mode the lasso selects on `selection_ds` and
/// estimates on `ds`.
fn run_method(
    ds: &Dataset,
    selection_ds: Option<&Dataset>,
    method: Method,
    primary: usize,
    cfg: &EstimatorConfig,
    rs: RandomSource,
) -> Result<DetailedEstimate<f64>, MvmrError> {
    match (method, selection_ds) {
        (Method::Lasso, Some(sel_ds)) => {
            let mut run = estimate_detailed(sel_ds, method, primary, cfg, rs)?;
            run.result = post_lasso(ds, run.selection.as_ref().expect("lasso selection"), primary)?;
            Ok(run)
        }
        _ => estimate_detailed(ds, method, primary, cfg, rs),
    }
}

fn cmd_estimate(a: EstimateArgs) -> anyhow::Result<bool> {
    let start = Instant::now();
    let methods = Method::parse_list(&a.methods).map_err(classify)?;
    let needs_seed = methods.iter().any(|m| matches!(m, Method::Presso | Method::Median));
    let seed = resolve_seed(&a.common, needs_seed)?;
    let cfg = estimator_config(&a.tuning)?;
    let ds = load(&a.input, a.k)?;
    let primary = index_arg("primary", a.primary, a.k)?;
    let selection_ds = match &a.selection_input {
        Some(p) => {
            if !methods.contains(&Method::Lasso) {
                bail!(usage("--selection-input only applies to the lasso method"));
            }
            Some(load(p, a.k)?)
        }
        None => None,
    };
    fs::create_dir_all(&a.common.out)?;
    let out = &a.common.out;

    let runs: Vec<(Method, Result<DetailedEstimate<f64>, MvmrError>)> = with_threads(a.common.threads, || {
        methods
            .iter()
            .map(|&m| (m, run_method(&ds, selection_ds.as_ref(), m, primary, &cfg, RandomSource::new(seed))))
            .collect()
    })?;

    let mut ok: Vec<Estimate> = Vec::new();
    let mut flagged: Vec<String> = Vec::new();
    let mut failures = 0;
    for (m, run) in &runs {
        match run {
            Ok(r) => {
                ok.push(r.result.clone());
                if let Some(rep) = &r.outliers {
                    write_outliers(out, rep)?;
                    flagged.extend(rep.outlier_ids());
                }
                if let Some(sel) = &r.selection {
                    write_lasso_selection(out, sel)?;
                    flagged.extend(sel.pleiotropic_ids());
                }
            }
            Err(e) => {
                failures += 1;
                eprintln!("method {m} failed: {e}");
            }
        }
    }
    write_results_csv(&ok, create(out, "results.csv")?)?;

    let ivw = match ok.iter().find(|r| r.method == Method::Ivw) {
        Some(r) => r.clone(),
        None => mvmr_ivw(&ds, cfg.dispersion).map_err(classify)?,
    };
    let mut table = residual_diagnostics(&ds, &ivw.estimates)?;
    table.flag_variants(&flagged);
    table.write_csv(create(out, "diagnostics.csv")?)?;

    let mut params = BTreeMap::new();
    params.insert("k".into(), a.k.to_string());
    params.insert("methods".into(), methods.iter().map(|m| m.tag()).collect::<Vec<_>>().join(","));
    params.insert("primary".into(), a.primary.to_string());
    params.insert("failed_methods".into(), failures.to_string());
    tuning_params(&a.tuning, &mut params);
    let mut inputs = vec![("input", a.input.as_path())];
    if let Some(p) = &a.selection_input {
        inputs.push(("selection_input", p.as_path()));
    }
    Manifest::new("estimate", params, seed, &inputs, start)?.write(out)?;
    Ok(failures == 0)
}

fn cmd_simulate(a: SimulateArgs) -> anyhow::Result<bool> {
    let start = Instant::now();
    let seed = resolve_seed(&a.common, true)?;
    let theta_set: ThetaSet = a.theta_set.parse().map_err(classify)?;
    let variant: Variant = a.variant.parse().map_err(classify)?;
    let methods = Method::parse_list(&a.methods).map_err(classify)?;
    let est = estimator_config(&a.tuning)?;
    let mut cfg = ScenarioConfig::preset(a.scenario, a.prop_invalid, theta_set, variant);
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg = cfg.apply_kv(&text).map_err(classify).with_context(|| format!("in {}", path.display()))?;
    }
    if let Some(r) = a.reps {
        cfg.n_reps = r;
    }
    if a.common.seed.is_some() || a.config.is_none() {
        // an explicit --seed wins over a seed in the config file
        cfg.seed = seed;
    }
    if a.fixed_parameters {
        cfg.redraw_parameters = false;
    }
    cfg.validate().map_err(classify)?;
    let target = index_arg("target-k", a.target_k, cfg.k)?;

    let study = with_threads(a.common.threads, || run_study_with(&cfg, &methods, target, &est))?.map_err(classify)?;
    let out = &a.common.out;
    fs::create_dir_all(out)?;
    write_metrics_csv(&study.rows, create(out, "metrics.csv")?)?;
    write_log_mse_table(&study.rows, create(out, "log_mse.csv")?)?;
    write_failures_csv(&study.rows, create(out, "failures.csv")?)?;
    fs::write(out.join("config.txt"), cfg.to_kv_string())?;

    let mut params = BTreeMap::new();
    params.insert("scenario".into(), a.scenario.to_string());
    params.insert("prop_invalid".into(), a.prop_invalid.to_string());
    params.insert("theta_set".into(), a.theta_set.clone());
    params.insert("variant".into(), a.variant.clone());
    params.insert("reps".into(), cfg.n_reps.to_string());
    params.insert("target_k".into(), a.target_k.to_string());
    params.insert("methods".into(), methods.iter().map(|m| m.tag()).collect::<Vec<_>>().join(","));
    params.insert("redraw_parameters".into(), cfg.redraw_parameters.to_string());
    tuning_params(&a.tuning, &mut params);
    let inputs: Vec<(&str, &Path)> = a.config.iter().map(|p| ("config", p.as_path())).collect();
    Manifest::new("simulate", params, cfg.seed, &inputs, start)?.write(out)?;
    Ok(true)
}

fn cmd_diagnose(a: DiagnoseArgs) -> anyhow::Result<bool> {
    let start = Instant::now();
    let method: Method = a.method.parse().map_err(classify)?;
    let seed = resolve_seed(&a.common, matches!(method, Method::Presso | Method::Median))?;
    let cfg = estimator_config(&a.tuning)?;
    let ds = load(&a.input, a.k)?;
    let primary = index_arg("primary", a.primary, a.k)?;
    let run = with_threads(a.common.threads, || run_method(&ds, None, method, primary, &cfg, RandomSource::new(seed)))?;
    let out = &a.common.out;
    fs::create_dir_all(out)?;
    for pair in pairwise_associations(&ds) {
        pair.write_csv(create(out, &format!("pairs_{}_{}.csv", pair.first + 1, pair.second + 1))?)?;
    }
    let succeeded = match &run {
        Ok(r) => {
            let mut table = residual_diagnostics(&ds, &r.result.estimates)?;
            if let Some(rep) = &r.outliers {
                table.flag_variants(&rep.outlier_ids());
            }
            if let Some(sel) = &r.selection {
                table.flag_variants(&sel.pleiotropic_ids());
                write_lasso_selection(out, sel)?;
            }
            table.write_csv(create(out, "residuals.csv")?)?;
            true
        }
        Err(e) => {
            eprintln!("method {method} failed: {e}");
            false
        }
    };

    let mut params = BTreeMap::new();
    params.insert("k".into(), a.k.to_string());
    params.insert("method".into(), method.tag().to_string());
    params.insert("primary".into(), a.primary.to_string());
    tuning_params(&a.tuning, &mut params);
    Manifest::new("diagnose", params, seed, &[("input", a.input.as_path())], start)?.write(out)?;
    Ok(succeeded)
}
