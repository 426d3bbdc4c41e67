//! Matrix containers and the fast Walsh–Hadamard transform.

mod dense;
mod hadamard;
mod sparse;

pub use dense::DenseMatrix;
pub use hadamard::{fwht_in_place, next_power_of_two, rotate, SignDiagonal};
pub use sparse::SparseMatrix;

/// Row-wise read access shared by dense and sparse matrices.
///
/// Projections consume their input one row at a time, so this is all they
/// need from a matrix.
pub trait RowMatrix: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// Overwrites `out[..ncols]` with row `i`. Entries past `ncols` are left
    /// untouched.
    fn write_row(&self, i: usize, out: &mut [f64]);

    /// Calls `f(col, value)` for each stored entry of row `i`.
    fn for_each_in_row<F: FnMut(usize, f64)>(&self, i: usize, f: F);
}

/// Squared Euclidean norm of each column: `out[j] = Σ_i X[i,j]²`.
pub fn column_sq_norms(x: &DenseMatrix) -> Vec<f64> {
    x.column_sq_norms()
}

#[cfg(test)]
pub(crate) use hadamard::tests as hadamard_tests;
