use std::time::Instant;

use anyhow::{bail, Context, Result};
use isrht_core::data::{self, Dataset, Features, ParseOptions};
use isrht_core::linalg::next_power_of_two;
use isrht_core::projection::{self, FitParams, Method, ProjectionModel};
use isrht_core::svm::{self, SvmParams};
use isrht_core::DenseMatrix;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::report::{ExperimentReport, RunRecord};
use crate::seeds::{repetition_seed, stream_seed, Stream};

/// Where train and test rows come from.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum DataSource {
    /// Split per repetition with `train_fraction`.
    Split(Dataset),
    /// Fixed train/test files; repetitions differ only in their seeds.
    Fixed { train: Dataset, test: Dataset },
}

impl DataSource {
    fn n_features(&self) -> usize {
        match self {
            DataSource::Split(ds) => ds.n_features(),
            DataSource::Fixed { train, .. } => train.n_features(),
        }
    }
}

/// Loads the configured files and runs the sweep.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let source = load_source(cfg)?;
    run_on_data(cfg, source)
}

pub fn load_source(cfg: &ExperimentConfig) -> Result<DataSource> {
    let read = |path: &std::path::Path, n_features| {
        data::parse_libsvm(path, &ParseOptions { n_features })
            .with_context(|| format!("loading {}", path.display()))
    };
    let train = read(&cfg.train_path, cfg.n_features)?;
    Ok(match &cfg.test_path {
        None => DataSource::Split(train),
        Some(path) => {
            let d = cfg.n_features.unwrap_or(train.n_features());
            let test = read(path, Some(d))?;
            // the test file may reach further than the training file
            let train = if test.n_features() > train.n_features() {
                read(&cfg.train_path, Some(test.n_features()))?
            } else {
                train
            };
            DataSource::Fixed { train, test }
        }
    })
}

struct Prepared {
    train: Features,
    train_labels: Vec<isrht_core::Label>,
    test: Features,
    test_labels: Vec<isrht_core::Label>,
}

fn prepare(cfg: &ExperimentConfig, source: &DataSource, rep_seed: u64) -> Result<Prepared> {
    let (train, test) = match source {
        DataSource::Split(ds) => data::split(ds, cfg.train_fraction, stream_seed(rep_seed, Stream::Split))
            .context("splitting data")?,
        DataSource::Fixed { train, test } => (train.clone(), test.clone()),
    };
    let (train, test) = if cfg.scale {
        let params = data::fit_scaler(train.features());
        (train.scaled(&params)?, test.scaled(&params)?)
    } else {
        (train, test)
    };
    let (train, train_labels) = train.into_parts();
    let (test, test_labels) = test.into_parts();
    Ok(Prepared {
        train,
        train_labels,
        test,
        test_labels,
    })
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs every (repetition, method, r) job; jobs execute in parallel and the
/// report does not depend on scheduling.
pub fn run_on_data(cfg: &ExperimentConfig, source: DataSource) -> Result<ExperimentReport> {
    cfg.validate()?;
    let d2 = next_power_of_two(source.n_features());
    let limit = if cfg.sparse_pipeline { usize::MAX } else { d2 };
    if let Some(&r) = cfg.r_values.iter().find(|&&r| r > limit) {
        bail!("r = {r} exceeds the padded dimension {d2}");
    }

    let prepared = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| prepare(cfg, &source, repetition_seed(cfg.seed, rep)))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, Method, usize)> = (0..cfg.repetitions)
        .flat_map(|rep| {
            cfg.methods
                .iter()
                .flat_map(move |&m| cfg.r_values.iter().map(move |&r| (rep, m, r)))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(rep, method, r)| {
            run_job(cfg, &prepared[rep], repetition_seed(cfg.seed, rep), rep, method, r)
                .with_context(|| format!("{method}, r = {r}, repetition {rep}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::from_rows(rows))
}

fn run_job(
    cfg: &ExperimentConfig,
    data: &Prepared,
    rep_seed: u64,
    repetition: usize,
    method: Method,
    r: usize,
) -> Result<RunRecord> {
    let params = FitParams {
        method,
        r,
        tradeoff: cfg.tradeoff,
        direction: cfg.direction,
        seed: stream_seed(rep_seed, Stream::Projection),
    };
    let y = Some(data.train_labels.as_slice());

    let start = Instant::now();
    let (model, z_train): (ProjectionModel, DenseMatrix) = if cfg.sparse_pipeline && method.is_hadamard() {
        projection::fit_sparse_pipeline_transform(&data.train, y, &params, Some(cfg.r_prime_factor * r))?
    } else {
        projection::fit_transform(&data.train, y, &params)?
    };
    let fit_ms = millis(start);

    let start = Instant::now();
    let z_test = model.transform(&data.test)?;
    let transform_ms = millis(start);

    let start = Instant::now();
    let base = SvmParams {
        tol: cfg.svm_tol,
        max_epochs: cfg.svm_max_epochs,
        seed: stream_seed(rep_seed, Stream::Solver),
        ..SvmParams::default()
    };
    let cv = svm::cross_validate(
        &z_train,
        &data.train_labels,
        &cfg.c_grid,
        cfg.folds,
        stream_seed(rep_seed, Stream::Folds),
        &base,
    )?;
    let final_params = SvmParams {
        c: cv.best_c,
        ..base
    };
    let svm_model = svm::train(&z_train, &data.train_labels, &final_params)?;
    let train_ms = millis(start);

    let start = Instant::now();
    let predicted = svm_model.predict(&z_test)?;
    let predict_ms = millis(start);

    let timed = |ms: f64| if cfg.timings { ms } else { 0.0 };
    Ok(RunRecord {
        method,
        r,
        repetition,
        c: cv.best_c,
        accuracy: svm::accuracy(&predicted, &data.test_labels),
        fit_ms: timed(fit_ms),
        transform_ms: timed(transform_ms),
        train_ms: timed(train_ms),
        predict_ms: timed(predict_ms),
    })
}
