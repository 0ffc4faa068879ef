use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 10_000;
const TOLERANCE: f64 = 1e-9;

/// Square sparse matrix in row-compressed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(a: ArrayView2<'_, f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "CSR matrices here are square");
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in a.outer_iter() {
            for (j, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    col_idx.push(j);
                    values.push(*v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n: a.nrows(), row_ptr, col_idx, values }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[[i, self.col_idx[k]]] = self.values[k];
            }
        }
        a
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// `out += A x`
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *o += s;
        }
    }

    pub fn matvec(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut out = vec![0.0; self.n];
        let x = x.to_vec();
        self.matvec_add(&x, &mut out);
        Array1::from(out)
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest eigenvalue modulus of a 2×2 matrix.
fn radius_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        // Complex pair: |λ|² = det.
        det.sqrt()
    }
}

/// Spectral radius by two-dimensional subspace iteration with Rayleigh-Ritz
/// extraction. A plain power iteration stalls when the dominant eigenvalues
/// are a complex-conjugate pair; a 2-D subspace captures either case.
pub fn spectral_radius(a: &CsrMatrix, seed: u64) -> Result<f64> {
    let n = a.n;
    if n == 0 {
        return Err(Error::InvalidParameters("empty matrix".into()));
    }
    if a.values.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(a.values.first().copied().unwrap_or(0.0).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q1: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut q2: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let orthonormalize = |q1: &mut Vec<f64>, q2: &mut Vec<f64>| {
        normalize(q1);
        let p = dot(q1, q2);
        q2.iter_mut().zip(q1.iter()).for_each(|(b, a)| *b -= p * a);
        // Reorthogonalize once; the pair can be nearly parallel.
        let p = dot(q1, q2);
        q2.iter_mut().zip(q1.iter()).for_each(|(b, a)| *b -= p * a);
        normalize(q2)
    };
    orthonormalize(&mut q1, &mut q2);
    let mut z1 = vec![0.0; n];
    let mut z2 = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut stable = 0;
    for _ in 0..MAX_ITERATIONS {
        z1.fill(0.0);
        z2.fill(0.0);
        a.matvec_add(&q1, &mut z1);
        a.matvec_add(&q2, &mut z2);
        // Ritz matrix Qᵀ A Q.
        let radius = radius_2x2(dot(&q1, &z1), dot(&q1, &z2), dot(&q2, &z1), dot(&q2, &z2));
        std::mem::swap(&mut q1, &mut z1);
        std::mem::swap(&mut q2, &mut z2);
        let second = orthonormalize(&mut q1, &mut q2);
        if second == 0.0 {
            // Rank-one image: the remaining direction is the dominant one.
            let mut z = vec![0.0; n];
            a.matvec_add(&q1, &mut z);
            return Ok(dot(&q1, &z).abs());
        }
        if (radius - prev).abs() <= TOLERANCE * radius.max(f64::MIN_POSITIVE) {
            stable += 1;
            if stable >= 3 {
                return Ok(radius);
            }
        } else {
            stable = 0;
        }
        prev = radius;
    }
    Err(Error::Init(format!(
        "spectral radius iteration did not converge in {MAX_ITERATIONS} iterations (last estimate {prev})"
    )))
}

/// Rescales `a` in place so its spectral radius equals `target`; returns the
/// radius measured before scaling.
pub fn scale_to_spectral_radius(a: &mut CsrMatrix, target: f64, seed: u64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::InvalidParameters(format!("target spectral radius must be > 0, got {target}")));
    }
    let rho = spectral_radius(a, seed)?;
    if !(rho > 0.0) {
        return Err(Error::Init("recurrent matrix has zero spectral radius; cannot rescale".into()));
    }
    a.scale(target / rho);
    Ok(rho)
}

/// Largest singular value via power iteration on AᵀA.
pub fn largest_singular_value(a: ArrayView2<'_, f64>) -> Result<f64> {
    let gram = a.t().dot(&a);
    let d = gram.nrows();
    if d == 0 {
        return Ok(0.0);
    }
    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    let mut prev = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let mut w = gram.dot(&v);
        let lambda = w.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        w /= norm;
        v = w;
        if (lambda - prev).abs() <= 1e-14 * lambda {
            return Ok(lambda.max(0.0).sqrt());
        }
        prev = lambda;
    }
    Err(Error::Init("singular value iteration did not converge".into()))
}
