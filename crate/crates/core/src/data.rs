//! LIBSVM-format datasets: parsing, min-max scaling to `[-1, 1]`,
//! stratified splitting and zero padding.
//!
//! Grammar, one sample per line:
//!
//! ```text
//! <label> <index>:<value> <index>:<value> ...   # optional comment
//! ```
//!
//! Indices are 1-based and strictly increasing within a line. Labels are
//! normalized to `+1`/`-1`: files that already use `{-1, +1}` are kept as
//! is; any other file with exactly two distinct labels (e.g. `{0, 1}` or
//! `{1, 2}`) maps the larger one to `+1` and the smaller to `-1`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{degenerate, dim_err, param_err, Error, Result};
use crate::linalg::{next_power_of_two, DenseMatrix, RowMatrix, SparseMatrix};
use crate::Label;

/// Feature storage of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum Features {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl Features {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Features::Dense(x) => x.clone(),
            Features::Sparse(x) => x.to_dense(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Features {
        match self {
            Features::Dense(x) => Features::Dense(x.select_rows(idx)),
            Features::Sparse(x) => Features::Sparse(x.select_rows(idx)),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Features::Sparse(_))
    }
}

impl RowMatrix for Features {
    fn nrows(&self) -> usize {
        match self {
            Features::Dense(x) => x.rows(),
            Features::Sparse(x) => x.rows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            Features::Dense(x) => x.cols(),
            Features::Sparse(x) => x.cols(),
        }
    }

    fn write_row(&self, i: usize, out: &mut [f64]) {
        match self {
            Features::Dense(x) => x.write_row(i, out),
            Features::Sparse(x) => x.write_row(i, out),
        }
    }

    fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, f: F) {
        match self {
            Features::Dense(x) => x.for_each_in_row(i, f),
            Features::Sparse(x) => x.for_each_in_row(i, f),
        }
    }
}

/// Original label values that became `+1` and `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub positive: f64,
    pub negative: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub label_map: Option<LabelMap>,
    pub scaler: Option<ScalerParams>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Features,
    labels: Vec<Label>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(features: Features, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(dim_err(format!(
                "{} labels for {} rows",
                labels.len(),
                features.nrows()
            )));
        }
        crate::check_labels(&labels)?;
        Ok(Self {
            features,
            labels,
            provenance: Provenance::default(),
        })
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l > 0).count();
        (pos, self.labels.len() - pos)
    }

    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn into_parts(self) -> (Features, Vec<Label>) {
        (self.features, self.labels)
    }

    /// Scaled copy; the result is dense.
    pub fn scaled(&self, params: &ScalerParams) -> Result<Dataset> {
        let x = apply_scaler(params, &self.features)?;
        let mut out = Dataset::new(Features::Dense(x), self.labels.clone())?;
        out.provenance = Provenance {
            scaler: Some(params.clone()),
            ..self.provenance.clone()
        };
        Ok(out)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Pins the feature count so that separate train and test files align.
    pub n_features: Option<usize>,
}

pub fn parse_libsvm(path: impl AsRef<Path>, opts: &ParseOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut ds = parse_libsvm_reader(BufReader::new(file), opts)?;
    ds.provenance.source = Some(path.to_path_buf());
    Ok(ds)
}

pub fn parse_libsvm_str(text: &str, opts: &ParseOptions) -> Result<Dataset> {
    parse_libsvm_reader(text.as_bytes(), opts)
}

pub fn parse_libsvm_reader<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut offsets = vec![0];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut max_index = 0;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let mut tokens = body.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| perr(format!("invalid label `{label_tok}`")))?;
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected index:value, found `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| perr(format!("invalid feature index `{idx}`")))?;
            if idx == 0 {
                return Err(perr("feature indices are 1-based".into()));
            }
            if idx <= prev {
                return Err(perr(format!("feature index {idx} does not increase after {prev}")));
            }
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| perr(format!("invalid feature value `{val}`")))?;
            if let Some(d) = opts.n_features {
                if idx > d {
                    return Err(perr(format!("feature index {idx} exceeds the pinned dimension {d}")));
                }
            }
            prev = idx;
            max_index = max_index.max(idx);
            indices.push(idx - 1);
            values.push(val);
        }
        raw_labels.push(label);
        offsets.push(indices.len());
    }

    let cols = opts.n_features.unwrap_or(max_index);
    let rows = raw_labels.len();
    let x = SparseMatrix::new(rows, cols, offsets, indices, values)?;
    let (labels, label_map) = normalize_labels(&raw_labels)?;
    let mut ds = Dataset::new(Features::Sparse(x), labels)?;
    ds.provenance.label_map = label_map;
    Ok(ds)
}

fn normalize_labels(raw: &[f64]) -> Result<(Vec<Label>, Option<LabelMap>)> {
    let mut distinct: Vec<f64> = raw.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.iter().all(|&v| v == 1.0 || v == -1.0) {
        return Ok((raw.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect(), None));
    }
    if distinct.len() != 2 {
        return Err(Error::Parse {
            line: 0,
            message: format!(
                "expected two label values, found {}: {:?}",
                distinct.len(),
                &distinct[..distinct.len().min(5)]
            ),
        });
    }
    let map = LabelMap {
        positive: distinct[1],
        negative: distinct[0],
    };
    log::info!(
        "label {} mapped to +1 and label {} mapped to -1",
        map.positive,
        map.negative
    );
    Ok((
        raw.iter().map(|&v| if v == map.positive { 1 } else { -1 }).collect(),
        Some(map),
    ))
}

/// Writes `ds` in LIBSVM format with `+1`/`-1` labels; zeros are omitted.
pub fn write_libsvm<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let mut line = String::new();
    for (i, &label) in ds.labels().iter().enumerate() {
        line.clear();
        line.push_str(if label > 0 { "+1" } else { "-1" });
        ds.features().for_each_in_row(i, |j, v| {
            if v != 0.0 {
                line.push_str(&format!(" {}:{}", j + 1, v));
            }
        });
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_libsvm(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_libsvm(ds, File::create(path)?)
}

/// Per-feature minimum and maximum of the training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerParams {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// `2(v − min)/(max − min) − 1`, clamped to `[-1, 1]`; constant
    /// features map to 0.
    pub fn scale_value(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi > lo {
            (2.0 * (v - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Column ranges of `x`; implicit zeros of sparse rows count as values.
pub fn fit_scaler(x: &Features) -> ScalerParams {
    let (n, d) = (x.nrows(), x.ncols());
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    let mut stored = vec![0usize; d];
    for i in 0..n {
        x.for_each_in_row(i, |j, v| {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
            stored[j] += 1;
        });
    }
    for j in 0..d {
        if stored[j] < n {
            min[j] = min[j].min(0.0);
            max[j] = max[j].max(0.0);
        }
        if stored[j] == 0 && n == 0 {
            min[j] = 0.0;
            max[j] = 0.0;
        }
    }
    ScalerParams { min, max }
}

/// Applies the affine map feature by feature. Sparse input comes back dense
/// since zeros generally do not map to zero.
pub fn apply_scaler(params: &ScalerParams, x: &Features) -> Result<DenseMatrix> {
    if params.dim() != x.ncols() {
        return Err(dim_err(format!(
            "scaler fitted on {} features applied to {}",
            params.dim(),
            x.ncols()
        )));
    }
    let d = x.ncols();
    let zero_image: Vec<f64> = (0..d).map(|j| params.scale_value(j, 0.0)).collect();
    let mut values = Vec::with_capacity(x.nrows() * d);
    for i in 0..x.nrows() {
        let start = values.len();
        values.extend_from_slice(&zero_image);
        x.for_each_in_row(i, |j, v| values[start + j] = params.scale_value(j, v));
    }
    DenseMatrix::new(x.nrows(), d, values)
}

/// Stratified shuffle split; returns sorted `(train, test)` row indices.
///
/// Each class contributes `round(fraction · n_c)` training rows, kept
/// within `1..n_c` so both sides see both classes.
pub fn split_indices(labels: &[Label], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(param_err(format!("train fraction {train_fraction} is not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [1, -1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(degenerate(format!(
                "class {class:+} has {} samples; a split needs at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_train = ((train_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.labels(), train_fraction, seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}

/// Appends zero columns up to the next power of two; unchanged if the
/// width already is one.
pub fn pad_to_pow2(x: &Features) -> Features {
    let d2 = next_power_of_two(x.ncols());
    match x {
        Features::Dense(m) => Features::Dense(m.pad_columns(d2).expect("widening")),
        Features::Sparse(m) => Features::Sparse(m.clone().with_cols(d2).expect("widening")),
    }
}
