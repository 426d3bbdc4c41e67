//! Two-class 2-d Gaussian data with means (3, 3) and (−3, −3).

use anyhow::{ensure, Result};
use isrht_core::data::{Dataset, Features};
use isrht_core::{DenseMatrix, Label, SparseMatrix};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const MEAN_POSITIVE: [f64; 2] = [3.0, 3.0];
pub const MEAN_NEGATIVE: [f64; 2] = [-3.0, -3.0];
/// Shared class covariance as stated for this data set. It is indefinite
/// (eigenvalues 2.75 and −0.75); samples use its PSD projection.
pub const STATED_COVARIANCE: [[f64; 2]; 2] = [[1.0, 1.75], [1.75, 1.0]];

/// Factor `L` with `L·Lᵀ` equal to `cov` after clamping negative
/// eigenvalues to zero. The flag reports whether clamping happened.
pub fn psd_factor(cov: [[f64; 2]; 2]) -> ([[f64; 2]; 2], bool) {
    let [[a, b], [b2, c]] = cov;
    let b = 0.5 * (b + b2);
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let eig = [mid + rad, mid - rad];
    // unit eigenvector of the larger eigenvalue
    let v0 = if b.abs() > 0.0 {
        let (x, y) = (b, eig[0] - a);
        let n = x.hypot(y);
        [x / n, y / n]
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v1 = [-v0[1], v0[0]];
    let clamped = eig[1] < 0.0;
    let s = [eig[0].max(0.0).sqrt(), eig[1].max(0.0).sqrt()];
    (
        [[v0[0] * s[0], v1[0] * s[1]], [v0[1] * s[0], v1[1] * s[1]]],
        clamped,
    )
}

/// `L·Lᵀ`.
pub fn covariance_of(factor: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = factor[i][0] * factor[j][0] + factor[i][1] * factor[j][1];
        }
    }
    out
}

/// `n_per_class` positives followed by `n_per_class` negatives.
pub fn generate_synthetic(n_per_class: usize, seed: u64) -> Result<Dataset> {
    ensure!(n_per_class >= 2, "need at least 2 samples per class");
    let (l, clamped) = psd_factor(STATED_COVARIANCE);
    if clamped {
        log::warn!(
            "covariance {:?} is not positive semidefinite; sampling from its PSD projection {:?}",
            STATED_COVARIANCE,
            covariance_of(l)
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(4 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (mean, label) in [(MEAN_POSITIVE, 1), (MEAN_NEGATIVE, -1)] {
        for _ in 0..n_per_class {
            let z: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            for (i, m) in mean.iter().enumerate() {
                values.push(m + l[i][0] * z[0] + l[i][1] * z[1]);
            }
            labels.push(label);
        }
    }
    let x = DenseMatrix::new(2 * n_per_class, 2, values)?;
    Ok(Dataset::new(Features::Dense(x), labels)?)
}

/// Places the two coordinates of `ds` at two random columns of a
/// `dim`-column sparse matrix and adds `noise_per_row` further entries per
/// row drawn from `N(0, noise_std²)` at random columns.
pub fn embed_sparse(
    ds: &Dataset,
    dim: usize,
    noise_per_row: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Dataset> {
    let d = ds.n_features();
    ensure!(dim >= d + noise_per_row, "target dimension {dim} too small");
    let x = ds.features().to_dense();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let home = index::sample(&mut rng, dim, d).into_vec();
    let mut rows = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let mut row: Vec<(usize, f64)> = home.iter().zip(x.row(i)).map(|(&j, &v)| (j, v)).collect();
        let mut added = 0;
        while added < noise_per_row {
            let j = rng.random_range(0..dim);
            if row.iter().any(|&(k, _)| k == j) {
                continue;
            }
            let z: f64 = rng.sample(StandardNormal);
            row.push((j, noise_std * z));
            added += 1;
        }
        row.sort_by_key(|&(j, _)| j);
        rows.push(row);
    }
    let labels: Vec<Label> = ds.labels().to_vec();
    Ok(Dataset::new(Features::Sparse(SparseMatrix::from_rows(dim, &rows)?), labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_reproduces_psd_input() {
        let cov = [[2.0, 0.5], [0.5, 1.0]];
        let (l, clamped) = psd_factor(cov);
        assert!(!clamped);
        let back = covariance_of(l);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - cov[i][j]).abs() < 1e-12);
            }
        }
        let (l, _) = psd_factor([[1.0, 0.0], [0.0, 3.0]]);
        assert!((covariance_of(l)[1][1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn stated_covariance_is_clamped_to_rank_one() {
        let (l, clamped) = psd_factor(STATED_COVARIANCE);
        assert!(clamped);
        let c = covariance_of(l);
        for v in c.iter().flatten() {
            assert!((v - 1.375).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn embedding_keeps_signal_columns() {
        let ds = generate_synthetic(5, 1).unwrap();
        let e = embed_sparse(&ds, 64, 3, 0.1, 2).unwrap();
        assert_eq!(e.n_features(), 64);
        assert_eq!(e.labels(), ds.labels());
        let x = ds.features().to_dense();
        let ex = e.features().to_dense();
        let cols: Vec<usize> = (0..64).filter(|&j| (0..10).all(|i| ex.get(i, j) != 0.0)).collect();
        assert_eq!(cols.len(), 2);
        let sums: Vec<f64> = cols.iter().map(|&j| (0..10).map(|i| ex.get(i, j)).sum()).collect();
        let orig: Vec<f64> = (0..2).map(|j| (0..10).map(|i| x.get(i, j)).sum()).collect();
        let mut a = sums.clone();
        let mut b = orig.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }
}
