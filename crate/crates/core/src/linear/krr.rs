use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Cholesky;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrrConfig {
    pub lambda: f64,
    pub sigma: f64,
    pub subsample_fraction: f64,
    pub seed: u64,
}

impl KrrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameters(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameters(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::InvalidParameters(format!(
                "subsample_fraction must be in (0, 1], got {}",
                self.subsample_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrrModel {
    /// retained × d_y
    pub alphas: Array2<f64>,
    /// retained × d_in
    pub support_inputs: Array2<f64>,
    pub sigma: f64,
    pub lambda: f64,
    pub subsample_fraction: f64,
}

/// Gaussian similarity `exp(-‖x − x'‖² / 2σ²)`.
pub fn rbf_kernel(x: &[f64], other: &[f64], sigma: f64) -> f64 {
    debug_assert_eq!(x.len(), other.len());
    let d2: f64 = x.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Exactly symmetric training Gram matrix, computed pairwise.
pub fn gram_matrix(x: ArrayView2<'_, f64>, sigma: f64) -> Array2<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in 0..i {
            let v = rbf_kernel(&rows[i], &rows[j], sigma);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// Cross kernel between query rows and support rows via
/// ‖a−b‖² = ‖a‖² + ‖b‖² − 2a·b.
fn cross_kernel(query: ArrayView2<'_, f64>, support: ArrayView2<'_, f64>, sigma: f64) -> Array2<f64> {
    let qn: Array1<f64> = query.map_axis(Axis(1), |r| r.dot(&r));
    let sn: Array1<f64> = support.map_axis(Axis(1), |r| r.dot(&r));
    let mut k = query.dot(&support.t());
    let scale = -1.0 / (2.0 * sigma * sigma);
    for ((i, j), v) in k.indexed_iter_mut() {
        let d2 = (qn[i] + sn[j] - 2.0 * *v).max(0.0);
        *v = (d2 * scale).exp();
    }
    k
}

fn subsample_indices(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n).collect();
    }
    let keep = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(keep);
    idx.sort_unstable();
    idx
}

/// Solves (K + λI)α = Y on a seeded uniform subsample of the rows.
pub fn krr_fit(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, config: &KrrConfig) -> Result<KrrModel> {
    config.validate()?;
    check_dim(x.nrows(), y.nrows())?;
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    let idx = subsample_indices(x.nrows(), config.subsample_fraction, config.seed);
    let support = x.select(Axis(0), &idx);
    let targets = y.select(Axis(0), &idx);
    let n = idx.len();

    let mut k = gram_matrix(support.view(), config.sigma);
    for i in 0..n {
        k[[i, i]] += config.lambda;
    }
    let chol = match Cholesky::factor(k.view()) {
        Ok(c) => c,
        Err(_) => {
            let trace: f64 = (0..n).map(|i| k[[i, i]] - config.lambda).sum();
            let jitter = 1e-10 * trace / n as f64;
            log::warn!("kernel system not positive definite; retrying with jitter {jitter:e}");
            for i in 0..n {
                k[[i, i]] += jitter;
            }
            Cholesky::factor(k.view())
                .map_err(|_| Error::Singular("kernel system singular after jitter; increase lambda".into()))?
        }
    };
    let mut alphas = chol.solve(targets.view());
    let r = &targets - &k.dot(&alphas);
    alphas += &chol.solve(r.view());
    if alphas.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("kernel solve produced non-finite coefficients".into()));
    }
    Ok(KrrModel {
        alphas,
        support_inputs: support,
        sigma: config.sigma,
        lambda: config.lambda,
        subsample_fraction: config.subsample_fraction,
    })
}

pub fn krr_predict(model: &KrrModel, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_dim(model.support_inputs.ncols(), x.ncols())?;
    const CHUNK: usize = 4096;
    let mut out = Array2::zeros((x.nrows(), model.alphas.ncols()));
    let mut start = 0;
    while start < x.nrows() {
        let end = (start + CHUNK).min(x.nrows());
        let block = x.slice(ndarray::s![start..end, ..]);
        let k = cross_kernel(block, model.support_inputs.view(), model.sigma);
        out.slice_mut(ndarray::s![start..end, ..]).assign(&k.dot(&model.alphas));
        start = end;
    }
    Ok(out)
}
