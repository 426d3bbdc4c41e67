use serde::{Deserialize, Serialize};

use super::RowMatrix;
use crate::error::{dim_err, Error, Result};

/// Row-major dense matrix of finite `f64` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDense")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDense {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl TryFrom<RawDense> for DenseMatrix {
    type Error = Error;

    fn try_from(raw: RawDense) -> Result<Self> {
        DenseMatrix::new(raw.rows, raw.cols, raw.values)
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(values.len()) {
            return Err(dim_err(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(dim_err(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |i| self.row(i))
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `Σ_i X[i,j]²` for every column `j`.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.row_iter() {
            for (acc, &v) in out.iter_mut().zip(row) {
                *acc += v * v;
            }
        }
        out
    }

    /// Gram matrix `X·Xᵀ`.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.rows;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let ri = self.row(i);
            for k in i..n {
                let v = dot(ri, self.row(k));
                out[i * n + k] = v;
                out[k * n + i] = v;
            }
        }
        DenseMatrix {
            rows: n,
            cols: n,
            values: out,
        }
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(dim_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let dst = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: rhs.cols,
            values: out,
        })
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(dim_err("shape mismatch in subtraction"));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copies the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: idx.len(),
            cols: self.cols,
            values,
        }
    }

    /// Copies the listed columns, in order, multiplying column `k` by `scales[k]`.
    pub fn gather_columns(&self, idx: &[usize], scales: &[f64]) -> Result<DenseMatrix> {
        if idx.len() != scales.len() {
            return Err(dim_err("index and scale lengths differ"));
        }
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.cols) {
            return Err(dim_err(format!("column {bad} out of range for {} columns", self.cols)));
        }
        let mut values = Vec::with_capacity(self.rows * idx.len());
        for row in self.row_iter() {
            values.extend(idx.iter().zip(scales).map(|(&j, &s)| row[j] * s));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            values,
        })
    }

    /// Appends zero columns up to `cols`.
    pub fn pad_columns(&self, cols: usize) -> Result<DenseMatrix> {
        if cols < self.cols {
            return Err(dim_err(format!("cannot pad {} columns down to {cols}", self.cols)));
        }
        if cols == self.cols {
            return Ok(self.clone());
        }
        let mut values = vec![0.0; self.rows * cols];
        for (i, row) in self.row_iter().enumerate() {
            values[i * cols..i * cols + self.cols].copy_from_slice(row);
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols,
            values,
        })
    }
}

impl RowMatrix for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn write_row(&self, i: usize, out: &mut [f64]) {
        out[..self.cols].copy_from_slice(self.row(i));
    }

    fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        for (j, &v) in self.row(i).iter().enumerate() {
            f(j, v);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
