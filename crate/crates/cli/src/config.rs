use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use isrht_core::projection::Method;
use isrht_core::sampling::Direction;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

/// JSON experiment description. Relative paths are resolved against the
/// directory of the config file by [`ExperimentConfig::load`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train_path: PathBuf,
    /// Separate test file; without it the training file is split.
    #[serde(default)]
    pub test_path: Option<PathBuf>,
    #[serde(default)]
    pub n_features: Option<usize>,
    pub methods: Vec<Method>,
    pub r_values: Vec<usize>,
    #[serde(default = "isrht_core::svm::default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
    #[serde(default = "defaults::folds")]
    pub folds: usize,
    #[serde(default = "defaults::tradeoff")]
    pub tradeoff: f64,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::train_fraction")]
    pub train_fraction: f64,
    /// Count sketch to `r_prime_factor · r` before Hadamard-family methods.
    #[serde(default)]
    pub sparse_pipeline: bool,
    #[serde(default = "defaults::r_prime_factor")]
    pub r_prime_factor: usize,
    /// Min-max scale features to [-1, 1] using training statistics.
    #[serde(default = "defaults::yes")]
    pub scale: bool,
    /// Record wall-clock durations; when off they are reported as 0 so that
    /// reports are byte-for-byte reproducible.
    #[serde(default = "defaults::yes")]
    pub timings: bool,
    /// Projected-gradient stopping tolerance of the SVM solver.
    #[serde(default = "defaults::svm_tol")]
    pub svm_tol: f64,
    #[serde(default = "defaults::svm_max_epochs")]
    pub svm_max_epochs: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
}

mod defaults {
    pub fn repetitions() -> usize {
        15
    }
    pub fn folds() -> usize {
        5
    }
    pub fn tradeoff() -> f64 {
        1.0
    }
    pub fn train_fraction() -> f64 {
        0.7
    }
    pub fn r_prime_factor() -> usize {
        2
    }
    pub fn yes() -> bool {
        true
    }
    pub fn svm_tol() -> f64 {
        0.1
    }
    pub fn svm_max_epochs() -> usize {
        1000
    }
}

impl ExperimentConfig {
    /// Defaults for everything but the data and the sweep.
    pub fn new(train_path: impl Into<PathBuf>, methods: Vec<Method>, r_values: Vec<usize>) -> Self {
        Self {
            train_path: train_path.into(),
            test_path: None,
            n_features: None,
            methods,
            r_values,
            c_grid: isrht_core::svm::default_c_grid(),
            repetitions: defaults::repetitions(),
            folds: defaults::folds(),
            tradeoff: defaults::tradeoff(),
            direction: Direction::default(),
            seed: 0,
            train_fraction: defaults::train_fraction(),
            sparse_pipeline: false,
            r_prime_factor: defaults::r_prime_factor(),
            scale: true,
            timings: true,
            svm_tol: defaults::svm_tol(),
            svm_max_epochs: defaults::svm_max_epochs(),
            output: None,
            format: ReportFormat::Csv,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("malformed experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::from_json(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.train_path);
        if let Some(p) = cfg.test_path.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.output.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            bail!("repetitions must be at least 1");
        }
        if self.methods.is_empty() {
            bail!("no projection methods given");
        }
        if self.r_values.is_empty() || self.r_values.contains(&0) {
            bail!("r values must be non-empty and all >= 1");
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            bail!("C grid must be non-empty with positive values");
        }
        if self.folds < 2 {
            bail!("need at least 2 cross-validation folds");
        }
        if !(self.tradeoff.is_finite() && self.tradeoff >= 0.0) {
            bail!("tradeoff a must be >= 0");
        }
        if self.test_path.is_none() && !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie in (0, 1)");
        }
        if self.r_prime_factor < 1 {
            bail!("r_prime_factor must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"train_path": "data/mushrooms", "methods": ["srht", "isrht-supervised"], "r_values": [16]}"#,
        )
        .unwrap();
        assert_eq!(cfg.repetitions, 15);
        assert_eq!(cfg.folds, 5);
        assert_eq!(cfg.tradeoff, 1.0);
        assert_eq!(cfg.c_grid.len(), 11);
        assert_eq!(cfg.methods, vec![Method::Srht, Method::IsrhtSupervised]);
        assert!(cfg.timings && cfg.scale && !cfg.sparse_pipeline);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"{"train_path": "x", "methods": ["pca"], "r_values": [4]}"#,
            r#"{"train_path": "x", "methods": ["srht"], "r_values": [0]}"#,
            r#"{"train_path": "x", "methods": ["srht"], "r_values": [4], "repetitions": 0}"#,
            r#"{"train_path": "x", "methods": ["srht"], "r_values": [4], "c_grid": []}"#,
            r#"{"train_path": "x", "methods": [], "r_values": [4]}"#,
            r#"{"train_path": "x", "methods": ["srht"], "r_values": [4], "bogus": 1}"#,
        ];
        for text in bad {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }
}
