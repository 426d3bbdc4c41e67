//! Randomized dimensionality reduction built on the subsampled randomized
//! Hadamard transform (SRHT).
//!
//! Besides the classic uniform SRHT, the crate provides three data-dependent
//! column samplers over the rotated matrix `X·D·H`:
//!
//! * norm-proportional importance sampling with unbiased rescaling,
//! * deterministic top-`r` selection by squared column norm,
//! * supervised selection by a per-column class-Laplacian score.
//!
//! Gaussian, Achlioptas and count-sketch projections are included as
//! baselines, along with a bias-free linear SVM (dual coordinate descent)
//! used to evaluate embeddings, and LIBSVM-format data handling.

pub mod data;
pub mod error;
pub mod linalg;
pub mod projection;
pub mod sampling;
pub mod svm;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, RowMatrix, SignDiagonal, SparseMatrix};

/// Labels are stored as `+1` / `-1`.
pub type Label = i8;

pub(crate) fn check_labels(y: &[Label]) -> Result<(usize, usize)> {
    let mut pos = 0;
    let mut neg = 0;
    for (i, &l) in y.iter().enumerate() {
        match l {
            1 => pos += 1,
            -1 => neg += 1,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "label {other} at position {i} is not +1 or -1"
                )))
            }
        }
    }
    Ok((pos, neg))
}
