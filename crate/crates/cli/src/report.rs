use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use isrht_core::projection::Method;
use serde::{Deserialize, Serialize};

use crate::config::ReportFormat;

pub const CSV_HEADER: &str = "method,r,repetition,C,accuracy,fit_ms,transform_ms,train_ms,predict_ms";

/// One (method, r, repetition) outcome. Durations are wall-clock
/// milliseconds; `train_ms` covers cross-validation plus the final fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub r: usize,
    pub repetition: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub accuracy: f64,
    pub fit_ms: f64,
    pub transform_ms: f64,
    pub train_ms: f64,
    pub predict_ms: f64,
}

/// Mean and sample standard deviation (`n − 1` denominator, 0 for a single
/// repetition) over the repetitions of one (method, r) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub r: usize,
    pub repetitions: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub fit_ms_mean: f64,
    pub transform_ms_mean: f64,
    pub train_ms_mean: f64,
    pub predict_ms_mean: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn sort_key(r: &RunRecord) -> (Method, usize, usize) {
    (r.method, r.r, r.repetition)
}

impl ExperimentReport {
    /// Sorts rows by (method, r, repetition) and computes the aggregates.
    pub fn from_rows(mut rows: Vec<RunRecord>) -> Self {
        rows.sort_by_key(sort_key);
        let aggregates = rows
            .chunk_by(|a, b| (a.method, a.r) == (b.method, b.r))
            .map(|group| {
                let col = |f: fn(&RunRecord) -> f64| group.iter().map(f).collect::<Vec<f64>>();
                let acc = col(|r| r.accuracy);
                Aggregate {
                    method: group[0].method,
                    r: group[0].r,
                    repetitions: group.len(),
                    accuracy_mean: mean(&acc),
                    accuracy_std: sample_std(&acc),
                    fit_ms_mean: mean(&col(|r| r.fit_ms)),
                    transform_ms_mean: mean(&col(|r| r.transform_ms)),
                    train_ms_mean: mean(&col(|r| r.train_ms)),
                    predict_ms_mean: mean(&col(|r| r.predict_ms)),
                }
            })
            .collect();
        Self { rows, aggregates }
    }

    pub fn aggregate(&self, method: Method, r: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.r == r)
    }

    pub fn accuracies(&self, method: Method, r: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|row| row.method == method && row.r == r)
            .map(|row| row.accuracy)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_HEADER.split(','))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf)?)
    }

    /// Parses CSV produced by [`write_csv`](Self::write_csv); aggregates
    /// are recomputed from the rows.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        anyhow::ensure!(
            header.join(",") == CSV_HEADER,
            "unexpected report header `{}`",
            header.join(",")
        );
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<RunRecord>, _>>()
            .context("malformed report row")?;
        Ok(Self::from_rows(rows))
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn emit(&self, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        match format {
            ReportFormat::Csv => self.write_csv(&mut out)?,
            ReportFormat::Json => out.write_all(self.to_json_string()?.as_bytes())?,
        }
        out.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
