use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{relative_residual, Cholesky};

/// Affine map `ŷ = W [x; 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrrModel {
    /// d_y × (d_in + 1); the last column is the intercept.
    pub weights: Array2<f64>,
    pub lambda: f64,
}

impl LrrModel {
    pub fn n_inputs(&self) -> usize {
        self.weights.ncols() - 1
    }

    pub fn n_outputs(&self) -> usize {
        self.weights.nrows()
    }

    /// Non-intercept block.
    pub fn coefficients(&self) -> ArrayView2<'_, f64> {
        self.weights.slice(s![.., ..self.n_inputs()])
    }

    pub fn intercept(&self) -> ndarray::ArrayView1<'_, f64> {
        self.weights.column(self.n_inputs())
    }
}

/// Accumulated sufficient statistics `[X 1]ᵀ[X 1]` and `[X 1]ᵀY`.
///
/// Statistics of disjoint row sets add up, which lets cross-validation build
/// every fold's system from per-cycle pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    pub gram: Array2<f64>,
    pub xty: Array2<f64>,
    pub rows: usize,
    pub intercept: bool,
}

impl NormalEquations {
    pub fn new(n_inputs: usize, n_outputs: usize, intercept: bool) -> Self {
        let d = n_inputs + 1;
        Self { gram: Array2::zeros((d, d)), xty: Array2::zeros((d, n_outputs)), rows: 0, intercept }
    }

    pub fn from_data(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, intercept: bool) -> Result<Self> {
        let mut ne = Self::new(x.ncols(), y.ncols(), intercept);
        ne.accumulate(x, y)?;
        Ok(ne)
    }

    pub fn accumulate(&mut self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<()> {
        let d = self.gram.nrows() - 1;
        check_dim(d, x.ncols())?;
        check_dim(self.xty.ncols(), y.ncols())?;
        check_dim(x.nrows(), y.nrows())?;
        let mut g = self.gram.slice_mut(s![..d, ..d]);
        ndarray::linalg::general_mat_mul(1.0, &x.t(), &x, 1.0, &mut g);
        let mut xy = self.xty.slice_mut(s![..d, ..]);
        ndarray::linalg::general_mat_mul(1.0, &x.t(), &y, 1.0, &mut xy);
        if self.intercept {
            let col_sums = x.sum_axis(Axis(0));
            for j in 0..d {
                self.gram[[j, d]] += col_sums[j];
                self.gram[[d, j]] += col_sums[j];
            }
            self.gram[[d, d]] += x.nrows() as f64;
            let y_sums = y.sum_axis(Axis(0));
            self.xty.row_mut(d).scaled_add(1.0, &y_sums);
        }
        self.rows += x.nrows();
        Ok(())
    }

    pub fn add(&mut self, other: &Self) {
        self.gram += &other.gram;
        self.xty += &other.xty;
        self.rows += other.rows;
    }

    pub fn sub(&mut self, other: &Self) {
        self.gram -= &other.gram;
        self.xty -= &other.xty;
        self.rows -= other.rows;
    }

    /// Regularized system matrix; the intercept is never penalized.
    pub fn system(&self, lambda: f64) -> Array2<f64> {
        let d = self.gram.nrows() - 1;
        let mut a = self.gram.clone();
        for j in 0..d {
            a[[j, j]] += lambda;
        }
        if !self.intercept {
            // Inert intercept row/column: forces a zero intercept weight.
            a.row_mut(d).fill(0.0);
            a.column_mut(d).fill(0.0);
            a[[d, d]] = 1.0;
        }
        a
    }

    fn rhs(&self) -> Array2<f64> {
        let mut b = self.xty.clone();
        if !self.intercept {
            let d = b.nrows() - 1;
            b.row_mut(d).fill(0.0);
        }
        b
    }

    pub fn solve(&self, lambda: f64) -> Result<LrrModel> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameters(format!("lambda must be >= 0, got {lambda}")));
        }
        if self.rows == 0 {
            return Err(Error::InvalidInput("no training rows".into()));
        }
        let a = self.system(lambda);
        let b = self.rhs();
        let singular = || Error::Singular("normal equations are singular; use lambda > 0".into());
        let chol = Cholesky::factor(a.view()).map_err(|_| singular())?;
        let mut w = chol.solve(b.view());
        // One refinement step tightens the optimality residual on poorly
        // scaled inputs.
        let r = &b - &a.dot(&w);
        w += &chol.solve(r.view());
        if w.iter().any(|v| !v.is_finite()) {
            return Err(singular());
        }
        if lambda == 0.0 && relative_residual(a.view(), w.view(), b.view()) > 1e-8 {
            return Err(singular());
        }
        Ok(LrrModel { weights: w.reversed_axes().as_standard_layout().into_owned(), lambda })
    }
}

/// Ridge regression with an unpenalized intercept (when `intercept` is
/// set): minimizes ‖XW − Y‖² + λ‖W‖² over the non-intercept weights.
pub fn lrr_fit(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, lambda: f64, intercept: bool) -> Result<LrrModel> {
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    NormalEquations::from_data(x, y, intercept)?.solve(lambda)
}

pub fn lrr_predict(model: &LrrModel, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let d = model.n_inputs();
    check_dim(d, x.ncols())?;
    let mut out = x.dot(&model.coefficients().t());
    out += &model.intercept();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn identity_targets_give_identity_weights() {
        let x = random(40, 3, 1);
        let m = lrr_fit(x.view(), x.view(), 0.0, true).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((m.coefficients()[[i, j]] - expect).abs() < 1e-10);
            }
            assert!(m.intercept()[i].abs() < 1e-10);
        }
        let pred = lrr_predict(&m, x.view()).unwrap();
        for (a, b) in pred.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn scalar_closed_form() {
        // w = Σxy / (Σx² + λ) = 28 / 15
        let x = array![[1.0], [2.0], [3.0]];
        let y = array![[2.0], [4.0], [6.0]];
        let m = lrr_fit(x.view(), y.view(), 1.0, false).unwrap();
        assert!((m.weights[[0, 0]] - 28.0 / 15.0).abs() < 1e-14);
        assert_eq!(m.weights[[0, 1]], 0.0);
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        for seed in 0..10 {
            let x = random(60, 5, seed);
            let y = random(60, 2, seed + 100);
            let lambda = 0.3;
            let m = lrr_fit(x.view(), y.view(), lambda, false).unwrap();
            let w = m.coefficients().t().to_owned();
            let grad = 2.0 * (x.t().dot(&x).dot(&w) - x.t().dot(&y) + lambda * &w);
            let worst = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(worst < 1e-8, "{worst}");
        }
    }

    #[test]
    fn exact_rank_deficiency_without_ridge_is_singular() {
        let x = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let y = array![[1.0], [2.0], [3.0]];
        assert!(matches!(lrr_fit(x.view(), y.view(), 0.0, false), Err(Error::Singular(_))));
        assert!(lrr_fit(x.view(), y.view(), 0.1, false).is_ok());
    }

    #[test]
    fn zero_weights_predict_zero_and_match_matvec() {
        let x = random(7, 4, 5);
        let zero = LrrModel { weights: Array2::zeros((2, 5)), lambda: 0.0 };
        assert!(lrr_predict(&zero, x.view()).unwrap().iter().all(|v| *v == 0.0));

        let w = random(2, 5, 6);
        let m = LrrModel { weights: w.clone(), lambda: 0.0 };
        let pred = lrr_predict(&m, x.view()).unwrap();
        for i in 0..7 {
            for k in 0..2 {
                let mut s = w[[k, 4]];
                for j in 0..4 {
                    s += w[[k, j]] * x[[i, j]];
                }
                assert!((pred[[i, k]] - s).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = LrrModel { weights: Array2::zeros((1, 3)), lambda: 0.0 };
        assert!(lrr_predict(&m, random(2, 3, 0).view()).is_err());
    }

    #[test]
    fn coefficient_norm_shrinks_with_lambda() {
        let x = random(50, 6, 8);
        let y = random(50, 2, 9);
        let mut prev = f64::INFINITY;
        for lambda in [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0] {
            let m = lrr_fit(x.view(), y.view(), lambda, true).unwrap();
            let norm = m.coefficients().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= prev + 1e-12, "lambda {lambda}: {norm} > {prev}");
            prev = norm;
        }
    }

    #[test]
    fn statistics_are_additive() {
        let x = random(30, 3, 10);
        let y = random(30, 1, 11);
        let mut total = NormalEquations::from_data(x.slice(s![..12, ..]), y.slice(s![..12, ..]), true).unwrap();
        let rest = NormalEquations::from_data(x.slice(s![12.., ..]), y.slice(s![12.., ..]), true).unwrap();
        total.add(&rest);
        let direct = NormalEquations::from_data(x.view(), y.view(), true).unwrap();
        for (a, b) in total.gram.iter().zip(direct.gram.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        total.sub(&rest);
        assert_eq!(total.rows, 12);
    }
}
