//! Monte Carlo study: individual-level data from the structural model, per-variant
//! summary regressions, every estimator, aggregate metrics. Double precision only.

pub mod config;
pub mod generate;
pub mod study;

pub use config::{Pleiotropy, SampleDesign, ScenarioConfig, ThetaSet, Variant};
pub use generate::{
    draw_parameters, generate_individual, generate_sample, make_summary_dataset, make_summary_dataset_with,
    r_squared, summarize_associations, IndividualData, ScenarioParameters,
};
pub use study::{
    replicate, run_study, run_study_with, write_failures_csv, write_log_mse_table, write_metrics_csv, MetricsRow,
    StudyOutput, METRICS_HEADER,
};
