//! Fitted projection pipelines.
//!
//! [`fit`] draws all randomness and returns a [`ProjectionModel`];
//! [`ProjectionModel::transform`] is then a deterministic map that can be
//! applied to any matrix with the same input dimension, e.g. training data
//! at fit time and test data later in another process (the model serializes
//! to JSON).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, param_err, Error, Result};
use crate::linalg::{fwht_in_place, next_power_of_two, DenseMatrix, RowMatrix, SignDiagonal};
use crate::sampling::{self, ColumnSelection, Direction, Strategy};
use crate::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gaussian,
    Achlioptas,
    SparseEmbedding,
    Srht,
    IsrhtNps,
    IsrhtTopr,
    IsrhtSupervised,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Gaussian,
        Method::Achlioptas,
        Method::SparseEmbedding,
        Method::Srht,
        Method::IsrhtNps,
        Method::IsrhtTopr,
        Method::IsrhtSupervised,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gaussian => "gaussian",
            Method::Achlioptas => "achlioptas",
            Method::SparseEmbedding => "sparse-embedding",
            Method::Srht => "srht",
            Method::IsrhtNps => "isrht-nps",
            Method::IsrhtTopr => "isrht-topr",
            Method::IsrhtSupervised => "isrht-supervised",
        }
    }

    /// Sign flip + Walsh–Hadamard rotation + column sampling.
    pub fn is_hadamard(self) -> bool {
        matches!(
            self,
            Method::Srht | Method::IsrhtNps | Method::IsrhtTopr | Method::IsrhtSupervised
        )
    }

    pub fn needs_labels(self) -> bool {
        self == Method::IsrhtSupervised
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "isrht-top-r" => return Ok(Method::IsrhtTopr),
            "count-sketch" => return Ok(Method::SparseEmbedding),
            _ => {}
        }
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| param_err(format!("unknown projection method `{s}`")))
    }
}

/// Settings for [`fit`].
#[derive(Clone, Debug, PartialEq)]
pub struct FitParams {
    pub method: Method,
    pub r: usize,
    /// Weight `a` of between-class pairs in the supervised score.
    pub tradeoff: f64,
    pub direction: Direction,
    pub seed: u64,
}

impl FitParams {
    pub fn new(method: Method, r: usize, seed: u64) -> Self {
        Self {
            method,
            r,
            tradeoff: 1.0,
            direction: Direction::Minimize,
            seed,
        }
    }
}

/// Count-sketch map: input column `j` is added into bucket `buckets[j]`
/// with sign `signs[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountSketch {
    width: usize,
    buckets: Vec<usize>,
    signs: SignDiagonal,
}

impl CountSketch {
    pub fn random<R: Rng + ?Sized>(input_dim: usize, width: usize, rng: &mut R) -> Result<Self> {
        if width == 0 {
            return Err(param_err("count sketch needs at least one bucket"));
        }
        let buckets = (0..input_dim).map(|_| rng.random_range(0..width)).collect();
        let signs = SignDiagonal::random(input_dim, rng);
        Ok(Self {
            width,
            buckets,
            signs,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.buckets.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn buckets(&self) -> &[usize] {
        &self.buckets
    }

    pub fn signs(&self) -> &SignDiagonal {
        &self.signs
    }

    // Adds row `i` of `x` into `out[..width]`; touches only stored entries.
    fn scatter_row<M: RowMatrix>(&self, x: &M, i: usize, out: &mut [f64]) {
        x.for_each_in_row(i, |j, v| {
            out[self.buckets[j]] += self.signs.sign(j) * v;
        });
    }

    /// `X·R_sparse`, in `O(nnz(X))`.
    pub fn transform<M: RowMatrix>(&self, x: &M) -> Result<DenseMatrix> {
        check_input(x, self.input_dim())?;
        let mut out = DenseMatrix::zeros(x.nrows(), self.width);
        par_rows(&mut out, self.width, |i, row| self.scatter_row(x, i, row));
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.buckets.iter().any(|&b| b >= self.width) {
            return Err(Error::InvalidModel("count sketch bucket out of range".into()));
        }
        if self.signs.len() != self.buckets.len() {
            return Err(Error::InvalidModel("count sketch needs one sign per input column".into()));
        }
        Ok(())
    }
}

/// Sign diagonal over the padded width plus the column selection applied
/// after the rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HadamardSampler {
    signs: SignDiagonal,
    selection: ColumnSelection,
}

impl HadamardSampler {
    pub fn signs(&self) -> &SignDiagonal {
        &self.signs
    }

    pub fn selection(&self) -> &ColumnSelection {
        &self.selection
    }

    pub fn padded_dim(&self) -> usize {
        self.signs.len()
    }
}

// Shared by fit and transform so that both produce bit-identical rows.
fn rotate_row(buf: &mut [f64], signs: &SignDiagonal) {
    signs.apply(buf);
    fwht_in_place(buf).expect("padded width is a power of two");
}

/// The fitted map. Exactly one variant matches each [`Method`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Projector {
    /// Explicit `d×r` matrix (gaussian, achlioptas).
    Dense { matrix: DenseMatrix },
    /// Count sketch straight to `r` buckets (sparse embedding).
    CountSketch { sketch: CountSketch },
    /// Pad, flip signs, rotate, sample.
    Hadamard { sampler: HadamardSampler },
    /// Count sketch to `r′` buckets, then a Hadamard stage on those.
    TwoStage {
        sketch: CountSketch,
        sampler: HadamardSampler,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    method: Method,
    input_dim: usize,
    /// Power-of-two width the Hadamard stage works in.
    padded_dim: usize,
    target_dim: usize,
    projector: Projector,
}

impl ProjectionModel {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn padded_dim(&self) -> usize {
        self.padded_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    /// Hadamard-family models expose their sign diagonal and selection.
    pub fn sampler(&self) -> Option<&HadamardSampler> {
        match &self.projector {
            Projector::Hadamard { sampler } | Projector::TwoStage { sampler, .. } => Some(sampler),
            _ => None,
        }
    }

    /// Width `r′` of the count-sketch stage of a two-stage model.
    pub fn first_stage_width(&self) -> Option<usize> {
        match &self.projector {
            Projector::TwoStage { sketch, .. } => Some(sketch.width()),
            _ => None,
        }
    }

    /// Maps an `n×d` matrix to `n×r`. Rows are processed in parallel.
    pub fn transform<M: RowMatrix>(&self, x: &M) -> Result<DenseMatrix> {
        check_input(x, self.input_dim)?;
        let r = self.target_dim;
        let mut out = DenseMatrix::zeros(x.nrows(), r);
        match &self.projector {
            Projector::Dense { matrix } => {
                par_rows(&mut out, r, |i, dst| {
                    x.for_each_in_row(i, |j, v| {
                        if v != 0.0 {
                            for (o, &m) in dst.iter_mut().zip(matrix.row(j)) {
                                *o += v * m;
                            }
                        }
                    })
                });
            }
            Projector::CountSketch { sketch } => {
                par_rows(&mut out, r, |i, dst| sketch.scatter_row(x, i, dst));
            }
            Projector::Hadamard { sampler } => {
                let d2 = self.padded_dim;
                par_rows_with_buffer(&mut out, r, d2, |i, buf, dst| {
                    x.write_row(i, buf);
                    rotate_row(buf, &sampler.signs);
                    sampler.selection.gather_into(buf, dst);
                });
            }
            Projector::TwoStage { sketch, sampler } => {
                let d2 = self.padded_dim;
                par_rows_with_buffer(&mut out, r, d2, |i, buf, dst| {
                    sketch.scatter_row(x, i, buf);
                    rotate_row(buf, &sampler.signs);
                    sampler.selection.gather_into(buf, dst);
                });
            }
        }
        Ok(out)
    }

    /// Structural consistency of a deserialized model.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.target_dim == 0 {
            return bad("target dimension is zero".into());
        }
        match (&self.projector, self.method) {
            (Projector::Dense { matrix }, Method::Gaussian | Method::Achlioptas) => {
                if matrix.shape() != (self.input_dim, self.target_dim) {
                    return bad(format!(
                        "projection matrix is {}x{}, expected {}x{}",
                        matrix.rows(),
                        matrix.cols(),
                        self.input_dim,
                        self.target_dim
                    ));
                }
            }
            (Projector::CountSketch { sketch }, Method::SparseEmbedding) => {
                sketch.validate()?;
                if sketch.input_dim() != self.input_dim || sketch.width() != self.target_dim {
                    return bad("count sketch dimensions disagree with the model".into());
                }
            }
            (Projector::Hadamard { sampler }, m) if m.is_hadamard() => {
                if self.padded_dim != next_power_of_two(self.input_dim) {
                    return bad("padded dimension is not the next power of two".into());
                }
                validate_sampler(sampler, self.padded_dim, self.target_dim, m)?;
            }
            (Projector::TwoStage { sketch, sampler }, m) if m.is_hadamard() => {
                sketch.validate()?;
                if sketch.input_dim() != self.input_dim {
                    return bad("count sketch input dimension disagrees with the model".into());
                }
                if self.padded_dim != next_power_of_two(sketch.width()) {
                    return bad("padded dimension does not match the first-stage width".into());
                }
                validate_sampler(sampler, self.padded_dim, self.target_dim, m)?;
            }
            (_, m) => return bad(format!("projector kind does not match method {m}")),
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: ProjectionModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn validate_sampler(s: &HadamardSampler, d2: usize, r: usize, method: Method) -> Result<()> {
    if s.signs.len() != d2 {
        return Err(Error::InvalidModel(format!(
            "{} signs for padded dimension {d2}",
            s.signs.len()
        )));
    }
    s.selection.validate(d2)?;
    if s.selection.len() != r {
        return Err(Error::InvalidModel("selection size differs from target dimension".into()));
    }
    let expected = match method {
        Method::Srht => Strategy::Uniform,
        Method::IsrhtNps => Strategy::Nps,
        Method::IsrhtTopr => Strategy::TopR,
        _ => Strategy::Supervised,
    };
    if s.selection.strategy() != expected {
        return Err(Error::InvalidModel(format!("selection strategy does not match method {method}")));
    }
    Ok(())
}

fn check_input<M: RowMatrix>(x: &M, d: usize) -> Result<()> {
    if x.ncols() != d {
        return Err(dim_err(format!("input has {} columns, model expects {d}", x.ncols())));
    }
    Ok(())
}

fn par_rows(out: &mut DenseMatrix, r: usize, f: impl Fn(usize, &mut [f64]) + Sync) {
    if r == 0 {
        return;
    }
    out.values_mut()
        .par_chunks_mut(r)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

fn par_rows_with_buffer(
    out: &mut DenseMatrix,
    r: usize,
    width: usize,
    f: impl Fn(usize, &mut [f64], &mut [f64]) + Sync,
) {
    out.values_mut().par_chunks_mut(r).enumerate().for_each_init(
        || vec![0.0; width],
        |buf, (i, row)| {
            buf.fill(0.0);
            f(i, buf, row);
        },
    );
}

/// `X·D·H` with `X` zero-padded to `signs.len()` columns.
pub fn rotate_padded<M: RowMatrix>(x: &M, signs: &SignDiagonal) -> Result<DenseMatrix> {
    let d2 = signs.len();
    if !d2.is_power_of_two() || x.ncols() > d2 {
        return Err(dim_err(format!(
            "cannot rotate {} columns in a width of {d2}",
            x.ncols()
        )));
    }
    let mut out = DenseMatrix::zeros(x.nrows(), d2);
    par_rows(&mut out, d2, |i, row| {
        x.write_row(i, row);
        rotate_row(row, signs);
    });
    Ok(out)
}

/// Draws a projection for `x`.
///
/// Hadamard-family methods pad to the next power of two `d₂ ≥ d`, rotate
/// the training rows and pick columns from the rotated matrix; `y` is only
/// read by the supervised method.
pub fn fit<M: RowMatrix>(x: &M, y: Option<&[Label]>, params: &FitParams) -> Result<ProjectionModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    fit_with_rng(x, y, params, &mut rng).map(|(model, _)| model)
}

/// [`fit`] followed by `transform(x)`, reusing the rotation computed while
/// fitting. The embedding is identical to calling `transform` afterwards.
pub fn fit_transform<M: RowMatrix>(
    x: &M,
    y: Option<&[Label]>,
    params: &FitParams,
) -> Result<(ProjectionModel, DenseMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (model, embedded) = fit_with_rng(x, y, params, &mut rng)?;
    let embedded = match embedded {
        Some(e) => e,
        None => model.transform(x)?,
    };
    Ok((model, embedded))
}

fn fit_with_rng<M: RowMatrix, R: Rng>(
    x: &M,
    y: Option<&[Label]>,
    params: &FitParams,
    rng: &mut R,
) -> Result<(ProjectionModel, Option<DenseMatrix>)> {
    let d = x.ncols();
    let d2 = next_power_of_two(d);
    let r = params.r;
    if r < 1 {
        return Err(param_err("target dimension r must be at least 1"));
    }
    if r > d2 {
        return Err(param_err(format!(
            "r = {r} exceeds the padded dimension {d2}"
        )));
    }
    let labels = if params.method.needs_labels() {
        let y = y.ok_or_else(|| param_err("isrht-supervised needs training labels"))?;
        if y.len() != x.nrows() {
            return Err(dim_err(format!("{} labels for {} rows", y.len(), x.nrows())));
        }
        Some(y)
    } else {
        None
    };

    let model = |projector| ProjectionModel {
        method: params.method,
        input_dim: d,
        padded_dim: d2,
        target_dim: r,
        projector,
    };

    match params.method {
        Method::Gaussian => {
            // N(0, 1/r) keeps squared norms unbiased
            let normal = Normal::new(0.0, 1.0 / (r as f64).sqrt()).expect("positive std");
            let matrix = DenseMatrix::from_fn(d, r, |_, _| normal.sample(rng));
            Ok((model(Projector::Dense { matrix }), None))
        }
        Method::Achlioptas => {
            let s = (3.0 / r as f64).sqrt();
            let matrix = DenseMatrix::from_fn(d, r, |_, _| match rng.random_range(0..6) {
                0 => s,
                1 => -s,
                _ => 0.0,
            });
            Ok((model(Projector::Dense { matrix }), None))
        }
        Method::SparseEmbedding => {
            let sketch = CountSketch::random(d, r, rng)?;
            Ok((model(Projector::CountSketch { sketch }), None))
        }
        m => {
            let (sampler, embedded) = fit_hadamard(x, labels, m, params, d2, rng)?;
            Ok((model(Projector::Hadamard { sampler }), Some(embedded)))
        }
    }
}

fn fit_hadamard<M: RowMatrix, R: Rng>(
    x: &M,
    y: Option<&[Label]>,
    method: Method,
    params: &FitParams,
    d2: usize,
    rng: &mut R,
) -> Result<(HadamardSampler, DenseMatrix)> {
    let signs = SignDiagonal::random(d2, rng);
    let x_r = rotate_padded(x, &signs)?;
    let r = params.r;
    let selection = match method {
        Method::Srht => sampling::uniform_selection(d2, r, rng)?,
        Method::IsrhtNps => {
            let p = sampling::nps_probabilities(&x_r.column_sq_norms())?;
            sampling::draw_with_replacement(&p, r, rng)?
        }
        Method::IsrhtTopr => sampling::top_r_selection(&x_r.column_sq_norms(), r)?,
        Method::IsrhtSupervised => {
            let y = y.ok_or_else(|| param_err("isrht-supervised needs training labels"))?;
            let b = sampling::supervised_scores(&x_r, y, params.tradeoff)?;
            sampling::supervised_selection(&b, r, params.direction)?
        }
        other => unreachable!("{other} is not a Hadamard method"),
    };
    let embedded = selection.apply(&x_r)?;
    Ok((HadamardSampler { signs, selection }, embedded))
}

/// Two-stage projection for high-dimensional sparse input: a count sketch
/// to `r′` buckets (default `2r`) in `O(nnz(X))`, then a Hadamard-family
/// stage fitted on the dense `n×r′` intermediate.
pub fn fit_sparse_pipeline<M: RowMatrix>(
    x: &M,
    y: Option<&[Label]>,
    params: &FitParams,
    r_prime: Option<usize>,
) -> Result<ProjectionModel> {
    fit_sparse_pipeline_transform(x, y, params, r_prime).map(|(m, _)| m)
}

/// [`fit_sparse_pipeline`] that also returns the training embedding.
pub fn fit_sparse_pipeline_transform<M: RowMatrix>(
    x: &M,
    y: Option<&[Label]>,
    params: &FitParams,
    r_prime: Option<usize>,
) -> Result<(ProjectionModel, DenseMatrix)> {
    if !params.method.is_hadamard() {
        return Err(param_err(format!(
            "the sparse pipeline needs a Hadamard-family method, not {}",
            params.method
        )));
    }
    let r = params.r;
    let r_prime = r_prime.unwrap_or(2 * r);
    if r_prime < r {
        return Err(param_err(format!("first-stage width r' = {r_prime} is below r = {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let sketch = CountSketch::random(x.ncols(), r_prime, &mut rng)?;
    let intermediate = sketch.transform(x)?;
    let (inner, embedded) = fit_with_rng(&intermediate, y, params, &mut rng)?;
    let sampler = match inner.projector {
        Projector::Hadamard { sampler } => sampler,
        _ => unreachable!("Hadamard method yields a Hadamard projector"),
    };
    let model = ProjectionModel {
        method: params.method,
        input_dim: x.ncols(),
        padded_dim: inner.padded_dim,
        target_dim: r,
        projector: Projector::TwoStage { sketch, sampler },
    };
    Ok((model, embedded.expect("Hadamard fit returns its embedding")))
}
