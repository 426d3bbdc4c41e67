//! Experiment harness around `isrht-core`: seeded method × r sweeps with
//! cross-validated linear SVMs, CSV/JSON reports, and a synthetic
//! two-Gaussian generator.

pub mod config;
pub mod experiment;
pub mod report;
pub mod seeds;
pub mod synth;

pub use config::{ExperimentConfig, ReportFormat};
pub use experiment::{run_experiment, run_on_data, DataSource};
pub use report::{Aggregate, ExperimentReport, RunRecord};
