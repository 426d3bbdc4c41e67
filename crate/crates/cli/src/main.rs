use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use isrht_cli::report::ExperimentReport;
use isrht_cli::{synth, ExperimentConfig, ReportFormat};
use isrht_core::data::{self, Dataset, Features, ParseOptions};
use isrht_core::projection::{self, FitParams, Method, ProjectionModel, Projector};
use isrht_core::sampling::Direction;

#[derive(Parser)]
#[command(name = "isrht", version, about = "Randomized Hadamard projections for linear SVMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a method × r sweep described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<ReportFormat>,
    },
    /// Write the two-Gaussian synthetic data set in LIBSVM format.
    Synth {
        /// Samples per class.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Embed the two coordinates into this many sparse columns.
        #[arg(long)]
        dim: Option<usize>,
        /// Noise entries per row when embedding.
        #[arg(long, default_value_t = 4, requires = "dim")]
        noise: usize,
    },
    /// Fit a projection (or load one) and write the embedding in LIBSVM format.
    Project {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, required_unless_present = "model")]
        method: Option<Method>,
        #[arg(long, required_unless_present = "model")]
        r: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        tradeoff: f64,
        #[arg(long, default_value = "minimize")]
        direction: Direction,
        /// Count sketch first, to r' = 2r columns unless --r-prime is given.
        #[arg(long)]
        sparse_pipeline: bool,
        #[arg(long, requires = "sparse_pipeline")]
        r_prime: Option<usize>,
        #[arg(long)]
        n_features: Option<usize>,
        /// Apply this saved model instead of fitting.
        #[arg(long, conflicts_with_all = ["method", "r", "model_out"])]
        model: Option<PathBuf>,
        /// Save the fitted model as JSON.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Print a saved projection model.
    Inspect {
        model: PathBuf,
        /// Dump the full JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            output,
            format,
        } => run(config, output, format),
        Command::Synth {
            n,
            seed,
            out,
            dim,
            noise,
        } => {
            let mut ds = synth::generate_synthetic(n, seed)?;
            if let Some(dim) = dim {
                ds = synth::embed_sparse(&ds, dim, noise, 0.1, seed.wrapping_add(1))?;
            }
            data::save_libsvm(&ds, &out).with_context(|| format!("writing {}", out.display()))?;
            log::info!("wrote {} rows to {}", ds.len(), out.display());
            Ok(())
        }
        Command::Project {
            data,
            out,
            method,
            r,
            seed,
            tradeoff,
            direction,
            sparse_pipeline,
            r_prime,
            n_features,
            model,
            model_out,
        } => {
            let ds = data::parse_libsvm(&data, &ParseOptions { n_features })
                .with_context(|| format!("loading {}", data.display()))?;
            let (model, embedded) = match model {
                Some(path) => {
                    let m = ProjectionModel::load(&path)
                        .with_context(|| format!("loading model {}", path.display()))?;
                    let z = m.transform(ds.features())?;
                    (m, z)
                }
                None => {
                    let (Some(method), Some(r)) = (method, r) else {
                        bail!("--method and --r are required when fitting");
                    };
                    let params = FitParams {
                        method,
                        r,
                        tradeoff,
                        direction,
                        seed,
                    };
                    let y = Some(ds.labels());
                    if sparse_pipeline {
                        projection::fit_sparse_pipeline_transform(ds.features(), y, &params, r_prime)?
                    } else {
                        projection::fit_transform(ds.features(), y, &params)?
                    }
                }
            };
            if let Some(path) = model_out {
                model.save(&path).with_context(|| format!("writing {}", path.display()))?;
            }
            let projected = Dataset::new(Features::Dense(embedded), ds.labels().to_vec())?;
            data::save_libsvm(&projected, &out).with_context(|| format!("writing {}", out.display()))?;
            log::info!(
                "{}: {} rows, {} -> {} columns",
                model.method(),
                projected.len(),
                model.input_dim(),
                model.target_dim()
            );
            Ok(())
        }
        Command::Inspect { model, json } => {
            let m = ProjectionModel::load(&model).with_context(|| format!("loading {}", model.display()))?;
            if json {
                println!("{}", m.to_json()?);
            } else {
                print_summary(&m);
            }
            Ok(())
        }
    }
}

fn run(config: PathBuf, output: Option<PathBuf>, format: Option<ReportFormat>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if output.is_some() {
        cfg.output = output;
    }
    if let Some(f) = format {
        cfg.format = f;
    }
    let report = isrht_cli::run_experiment(&cfg)?;
    print_aggregates(&report);
    match &cfg.output {
        Some(path) => {
            report.emit(cfg.format, path)?;
            log::info!("report written to {}", path.display());
        }
        None => match cfg.format {
            ReportFormat::Csv => print!("{}", report.to_csv_string()?),
            ReportFormat::Json => print!("{}", report.to_json_string()?),
        },
    }
    Ok(())
}

fn print_aggregates(report: &ExperimentReport) {
    eprintln!("{:<18} {:>6} {:>5} {:>9} {:>8} {:>10} {:>10}", "method", "r", "reps", "acc %", "std", "fit ms", "train ms");
    for a in &report.aggregates {
        eprintln!(
            "{:<18} {:>6} {:>5} {:>9.2} {:>8.2} {:>10.2} {:>10.2}",
            a.method.name(),
            a.r,
            a.repetitions,
            100.0 * a.accuracy_mean,
            100.0 * a.accuracy_std,
            a.fit_ms_mean,
            a.train_ms_mean
        );
    }
}

fn print_summary(m: &ProjectionModel) {
    println!("method:      {}", m.method());
    println!("input dim:   {}", m.input_dim());
    println!("padded dim:  {}", m.padded_dim());
    println!("target dim:  {}", m.target_dim());
    if let Some(w) = m.first_stage_width() {
        println!("sketch dim:  {w}");
    }
    match m.projector() {
        Projector::Dense { matrix } => {
            let nnz = matrix.as_slice().iter().filter(|v| **v != 0.0).count();
            println!("matrix:      {}x{}, {nnz} nonzeros", matrix.rows(), matrix.cols());
        }
        Projector::CountSketch { sketch } => {
            println!("buckets:     {}", sketch.width());
        }
        Projector::Hadamard { .. } | Projector::TwoStage { .. } => {}
    }
    if let Some(s) = m.sampler() {
        let negative = (0..s.signs().len()).filter(|&i| s.signs().sign(i) < 0.0).count();
        println!("sign flips:  {negative} of {}", s.signs().len());
        println!("strategy:    {:?}", s.selection().strategy());
        println!("columns:     {:?}", s.selection().indices());
        println!("scales:      {:?}", s.selection().scales());
    }
}
