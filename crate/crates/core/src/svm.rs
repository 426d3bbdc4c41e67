//! Bias-free L1-loss linear SVM trained by dual coordinate descent.
//!
//! Solves `max_α 1ᵀα − ½ αᵀ Y X Xᵀ Y α` subject to `0 ≤ α ≤ C`, keeping
//! `w = Σ_i α_i y_i x_i` up to date after every coordinate step. There is
//! no bias term, so the equality constraint `yᵀα = 0` does not appear.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{degenerate, dim_err, param_err, Error, Result};
use crate::linalg::DenseMatrix;
use crate::Label;

#[derive(Clone, Debug, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// Stop once every projected gradient is below this in magnitude.
    pub tol: f64,
    pub max_epochs: usize,
    /// Seeds the per-epoch coordinate permutation.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-4,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

impl SvmParams {
    pub fn with_c(c: f64) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    w: Vec<f64>,
    c: f64,
}

impl SvmModel {
    pub fn new(w: Vec<f64>, c: f64) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite weight".into()));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidModel(format!("C = {c} must be positive")));
        }
        Ok(Self { w, c })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// `⟨w, x_i⟩` for every row.
    pub fn decision_values(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if x.cols() != self.w.len() {
            return Err(dim_err(format!(
                "input has {} columns, model has {} weights",
                x.cols(),
                self.w.len()
            )));
        }
        Ok(x.row_iter().map(|row| dot(&self.w, row)).collect())
    }

    /// `sign(⟨w, x_i⟩)` with `sign(0) = +1`.
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<Label>> {
        Ok(self
            .decision_values(x)?
            .into_iter()
            .map(|m| if m >= 0.0 { 1 } else { -1 })
            .collect())
    }
}

/// Dual variables and the dual objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub alpha: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: SvmModel,
    pub dual: DualState,
    pub epochs: usize,
    pub converged: bool,
    /// Largest projected-gradient magnitude at the returned solution.
    pub max_violation: f64,
    /// Dual objective after each epoch.
    pub objective_trace: Vec<f64>,
}

pub fn train(x: &DenseMatrix, y: &[Label], params: &SvmParams) -> Result<SvmModel> {
    train_dual(x, y, params).map(|o| o.model)
}

pub fn train_dual(x: &DenseMatrix, y: &[Label], params: &SvmParams) -> Result<TrainOutcome> {
    let n = x.rows();
    if y.len() != n {
        return Err(dim_err(format!("{} labels for {n} rows", y.len())));
    }
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(param_err(format!("C = {} must be positive", params.c)));
    }
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(param_err("tolerance must be positive"));
    }
    let (pos, neg) = crate::check_labels(y)?;
    if pos == 0 || neg == 0 {
        return Err(degenerate("SVM training needs both classes"));
    }

    let c = params.c;
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let qd: Vec<f64> = x.row_iter().map(|row| dot(row, row)).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; x.cols()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    while epochs < params.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut epoch_max = 0.0f64;
        for &i in &order {
            let row = x.row(i);
            let g = yf[i] * dot(&w, row) - 1.0;
            let pg = projected_gradient(g, alpha[i], c);
            epoch_max = epoch_max.max(pg.abs());
            if pg == 0.0 {
                continue;
            }
            let old = alpha[i];
            let new = if qd[i] > 0.0 {
                (old - g / qd[i]).clamp(0.0, c)
            } else {
                // zero row: w is unaffected and the objective grows with α_i
                c
            };
            alpha[i] = new;
            let step = (new - old) * yf[i];
            if step != 0.0 {
                for (wk, &xk) in w.iter_mut().zip(row) {
                    *wk += step * xk;
                }
            }
        }
        trace.push(dual_objective(&alpha, &w));
        if epoch_max < params.tol && max_violation(x, &yf, &w, &alpha, c) < params.tol {
            converged = true;
            break;
        }
    }

    let objective = dual_objective(&alpha, &w);
    let violation = max_violation(x, &yf, &w, &alpha, c);
    Ok(TrainOutcome {
        model: SvmModel::new(w, c)?,
        dual: DualState { alpha, objective },
        epochs,
        converged,
        max_violation: violation,
        objective_trace: trace,
    })
}

fn projected_gradient(g: f64, alpha: f64, c: f64) -> f64 {
    if alpha <= 0.0 {
        g.min(0.0)
    } else if alpha >= c {
        g.max(0.0)
    } else {
        g
    }
}

fn max_violation(x: &DenseMatrix, y: &[f64], w: &[f64], alpha: &[f64], c: f64) -> f64 {
    x.row_iter()
        .zip(y)
        .zip(alpha)
        .map(|((row, &yi), &a)| projected_gradient(yi * dot(w, row) - 1.0, a, c).abs())
        .fold(0.0, f64::max)
}

/// `1ᵀα − ½‖w‖²`, which equals the dual objective when `w = Σ α_i y_i x_i`.
pub fn dual_objective(alpha: &[f64], w: &[f64]) -> f64 {
    alpha.iter().sum::<f64>() - 0.5 * dot(w, w)
}

/// Worst KKT residual of `(w, α)`: for `α_i = 0` how far `y_i⟨w,x_i⟩`
/// falls below 1, for `α_i = C` how far it exceeds 1, and otherwise
/// `|y_i⟨w,x_i⟩ − 1|`.
pub fn kkt_residual(x: &DenseMatrix, y: &[Label], w: &[f64], alpha: &[f64], c: f64) -> f64 {
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    max_violation(x, &yf, w, alpha, c)
}

pub fn accuracy(predicted: &[Label], truth: &[Label]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin
/// into `k` folds, so every fold holds both classes.
pub fn stratified_folds(y: &[Label], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(param_err(format!("need at least 2 folds, got {k}")));
    }
    let (pos, neg) = crate::check_labels(y)?;
    if pos < k || neg < k {
        return Err(degenerate(format!(
            "{k}-fold split needs at least {k} samples per class, have {pos}/{neg}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for class in [1, -1] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub best_c: f64,
    /// Mean validation accuracy for each grid entry, in grid order.
    pub mean_accuracy: Vec<f64>,
}

/// Picks `C` from `grid` by stratified `k`-fold cross-validation.
///
/// The winner has the highest mean fold accuracy; ties go to the smaller `C`.
pub fn cross_validate(
    x: &DenseMatrix,
    y: &[Label],
    grid: &[f64],
    k: usize,
    seed: u64,
    base: &SvmParams,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(param_err("empty C grid"));
    }
    if y.len() != x.rows() {
        return Err(dim_err(format!("{} labels for {} rows", y.len(), x.rows())));
    }
    let folds = stratified_folds(y, k, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let (held, kept): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] == f);
            (kept, held)
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..k).map(move |f| (g, f)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (train_idx, val_idx) = &splits[f];
            let params = SvmParams {
                c: grid[g],
                ..base.clone()
            };
            let xt = x.select_rows(train_idx);
            let yt: Vec<Label> = train_idx.iter().map(|&i| y[i]).collect();
            let model = train(&xt, &yt, &params)?;
            let xv = x.select_rows(val_idx);
            let yv: Vec<Label> = val_idx.iter().map(|&i| y[i]).collect();
            Ok(accuracy(&model.predict(&xv)?, &yv))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mean_accuracy: Vec<f64> = scores
        .chunks(k)
        .map(|c| c.iter().sum::<f64>() / k as f64)
        .collect();
    let mut best = 0;
    for g in 1..grid.len() {
        let (a, b) = (mean_accuracy[g], mean_accuracy[best]);
        if a > b || (a == b && grid[g] < grid[best]) {
            best = g;
        }
    }
    Ok(CvResult {
        best_c: grid[best],
        mean_accuracy,
    })
}

/// `{2⁻⁵, 2⁻⁴, …, 2⁵}`.
pub fn default_c_grid() -> Vec<f64> {
    (-5..=5).map(|e| 2f64.powi(e)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn separable(n: usize, d: usize, seed: u64) -> (DenseMatrix, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        while rows.len() < n {
            let row: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = dot(&row, &dir);
            if m.abs() < 0.2 {
                continue;
            }
            y.push(if m > 0.0 { 1 } else { -1 });
            rows.push(row);
        }
        if !y.contains(&1) || !y.contains(&-1) {
            return separable(n, d, seed + 1000);
        }
        (DenseMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn two_point_analytic_solution() {
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let y = [1, -1];
        let out = train_dual(&x, &y, &SvmParams { tol: 1e-12, ..SvmParams::with_c(10.0) }).unwrap();
        assert!(out.converged);
        let w = out.model.weights();
        assert!((w[0] - 1.0).abs() < 1e-9 && w[1].abs() < 1e-12);
        let margins = out.model.decision_values(&x).unwrap();
        assert!((margins[0] - 1.0).abs() < 1e-9 && (margins[1] + 1.0).abs() < 1e-9);
        // any α₁ + α₂ = 1 reproduces w; the objective is 1 − ½ = ½
        assert!((out.dual.alpha[0] + out.dual.alpha[1] - 1.0).abs() < 1e-9);
        assert!((out.dual.objective - 0.5).abs() < 1e-9);
        assert_eq!(out.model.predict(&x).unwrap(), vec![1, -1]);
    }

    #[test]
    fn predict_conventions() {
        let m = SvmModel::new(vec![1.0, 0.0], 1.0).unwrap();
        let x = DenseMatrix::from_rows(&[[2.0, 5.0], [0.0, 7.0], [-0.5, 1.0]]).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![1, 1, -1]);
        assert!(m.predict(&DenseMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn separable_toy_is_fit_exactly() {
        let (x, y) = separable(60, 3, 1);
        let model = train(&x, &y, &SvmParams::with_c(1000.0)).unwrap();
        assert_eq!(model.predict(&x).unwrap(), y);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = DenseMatrix::zeros(3, 2);
        assert!(matches!(train(&x, &[1, 1, 1], &SvmParams::default()), Err(Error::DegenerateInput(_))));
        assert!(train(&x, &[1, -1], &SvmParams::default()).is_err());
        assert!(train(&x, &[1, -1, 1], &SvmParams::with_c(0.0)).is_err());
    }

    #[test]
    fn zero_rows_go_to_the_box_edge() {
        let x = DenseMatrix::from_rows(&[[1.0], [-1.0], [0.0]]).unwrap();
        let out = train_dual(&x, &[1, -1, 1], &SvmParams::with_c(0.5)).unwrap();
        assert_eq!(out.dual.alpha[2], 0.5);
        assert!(out.converged);
    }

    #[test]
    fn weights_track_alpha_and_objective_climbs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DenseMatrix::from_fn(40, 5, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<Label> = (0..40).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let out = train_dual(&x, &y, &SvmParams::with_c(2.0)).unwrap();
        let mut w = vec![0.0; 5];
        for i in 0..40 {
            for k in 0..5 {
                w[k] += out.dual.alpha[i] * f64::from(y[i]) * x.get(i, k);
            }
        }
        for (a, b) in w.iter().zip(out.model.weights()) {
            assert!((a - b).abs() < 1e-10);
        }
        for pair in out.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12);
        }
        assert!(out.dual.alpha.iter().all(|&a| (0.0..=2.0).contains(&a)));
        if out.converged {
            assert!(kkt_residual(&x, &y, out.model.weights(), &out.dual.alpha, 2.0) < 1e-4);
        }
    }

    #[test]
    fn rescaling_features_and_c_keeps_the_boundary() {
        let (x, y) = separable(30, 2, 9);
        let s = 3.0;
        let xs = DenseMatrix::from_fn(30, 2, |i, j| s * x.get(i, j));
        let tight = SvmParams { tol: 1e-10, max_epochs: 100_000, ..SvmParams::with_c(0.7) };
        let m1 = train(&x, &y, &tight).unwrap();
        let m2 = train(&xs, &y, &SvmParams { c: 0.7 / (s * s), ..tight }).unwrap();
        let grid = DenseMatrix::from_fn(121, 2, |i, j| {
            let v = if j == 0 { i / 11 } else { i % 11 };
            -1.0 + 0.2 * v as f64
        });
        let grid_s = DenseMatrix::from_fn(121, 2, |i, j| s * grid.get(i, j));
        let (d1, d2) = (m1.decision_values(&grid).unwrap(), m2.decision_values(&grid_s).unwrap());
        for (a, b) in d1.iter().zip(&d2) {
            if a.abs() > 1e-6 {
                assert_eq!(a.signum(), b.signum());
            }
        }
    }

    #[test]
    fn folds_are_stratified() {
        let y: Vec<Label> = (0..23).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let folds = stratified_folds(&y, 5, 3).unwrap();
        for f in 0..5 {
            let members: Vec<Label> = (0..23).filter(|&i| folds[i] == f).map(|i| y[i]).collect();
            assert!(members.contains(&1) && members.contains(&-1));
        }
        assert!(stratified_folds(&y[..6], 5, 0).is_err());
        assert!(stratified_folds(&y, 1, 0).is_err());
    }

    #[test]
    fn cv_trivial_grids() {
        let (x, y) = separable(40, 2, 2);
        let base = SvmParams::default();
        assert_eq!(cross_validate(&x, &y, &[0.3], 5, 1, &base).unwrap().best_c, 0.3);
        let grid = [4.0, 64.0, 16.0, 256.0];
        let res = cross_validate(&x, &y, &grid, 5, 1, &base).unwrap();
        if res.mean_accuracy.iter().all(|&a| a == 1.0) {
            assert_eq!(res.best_c, 4.0);
        }
        assert!(cross_validate(&x, &y, &[], 5, 1, &base).is_err());
    }

    #[test]
    fn cv_matches_independent_fold_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let label: Label = if i % 2 == 0 { 1 } else { -1 };
            let flip = rng.random::<f64>() < 0.15;
            let shift = if flip { -f64::from(label) } else { f64::from(label) };
            rows.push([shift + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            y.push(label);
        }
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let grid = default_c_grid();
        let base = SvmParams::default();
        let res = cross_validate(&x, &y, &grid, 5, 8, &base).unwrap();

        let folds = stratified_folds(&y, 5, 8).unwrap();
        let mut table = vec![0.0; grid.len()];
        for (g, &c) in grid.iter().enumerate() {
            for f in 0..5 {
                let tr: Vec<usize> = (0..200).filter(|&i| folds[i] != f).collect();
                let va: Vec<usize> = (0..200).filter(|&i| folds[i] == f).collect();
                let ytr: Vec<Label> = tr.iter().map(|&i| y[i]).collect();
                let m = train(&x.select_rows(&tr), &ytr, &SvmParams { c, ..base.clone() }).unwrap();
                let pred = m.predict(&x.select_rows(&va)).unwrap();
                let hits = va.iter().zip(&pred).filter(|(&i, &p)| y[i] == p).count();
                table[g] += hits as f64 / va.len() as f64;
            }
        }
        let mut best = 0;
        for g in 0..grid.len() {
            if table[g] > table[best] + 1e-12 {
                best = g;
            }
        }
        assert_eq!(res.best_c, grid[best]);
    }

    #[test]
    fn default_grid_spans_powers_of_two() {
        let g = default_c_grid();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 1.0 / 32.0);
        assert_eq!(g[10], 32.0);
    }
}
