use serde::{Deserialize, Serialize};

use super::{DenseMatrix, RowMatrix};
use crate::error::{dim_err, Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != rows + 1 || offsets[0] != 0 {
            return Err(dim_err(format!(
                "expected {} row offsets starting at 0, got {}",
                rows + 1,
                offsets.len()
            )));
        }
        if indices.len() != values.len() || offsets[rows] != values.len() {
            return Err(dim_err("offsets, indices and values disagree on the number of entries"));
        }
        for i in 0..rows {
            let (lo, hi) = (offsets[i], offsets[i + 1]);
            if lo > hi {
                return Err(dim_err(format!("row offsets decrease at row {i}")));
            }
            let row = &indices[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(dim_err(format!("column indices of row {i} are not strictly increasing")));
            }
            if let Some(&j) = row.last() {
                if j >= cols {
                    return Err(dim_err(format!("column {j} in row {i} exceeds {cols} columns")));
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite stored value".into()));
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    /// Builds a matrix from per-row `(column, value)` lists; each list must
    /// already be sorted by column.
    pub fn from_rows(cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in rows {
            for &(j, v) in row {
                indices.push(j);
                values.push(v);
            }
            offsets.push(indices.len());
        }
        Self::new(rows.len(), cols, offsets, indices, values)
    }

    pub fn from_dense(x: &DenseMatrix) -> Self {
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for row in x.row_iter() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Self {
            rows: x.rows(),
            cols: x.cols(),
            offsets,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                out[i * self.cols + j] = v;
            }
        }
        DenseMatrix::new(self.rows, self.cols, out).expect("stored values are finite")
    }

    /// Same entries, different declared column count.
    pub fn with_cols(mut self, cols: usize) -> Result<Self> {
        if let Some(&max) = self.indices.iter().max() {
            if max >= cols {
                return Err(dim_err(format!("column {max} does not fit in {cols} columns")));
            }
        }
        self.cols = cols;
        Ok(self)
    }

    pub fn select_rows(&self, idx: &[usize]) -> SparseMatrix {
        let mut offsets = Vec::with_capacity(idx.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for &i in idx {
            let (ci, cv) = self.row(i);
            indices.extend_from_slice(ci);
            values.extend_from_slice(cv);
            offsets.push(indices.len());
        }
        SparseMatrix {
            rows: idx.len(),
            cols: self.cols,
            offsets,
            indices,
            values,
        }
    }
}

impl RowMatrix for SparseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn write_row(&self, i: usize, out: &mut [f64]) {
        out[..self.cols].fill(0.0);
        let (idx, val) = self.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            out[j] = v;
        }
    }

    fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        let (idx, val) = self.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            f(j, v);
        }
    }
}
