//! Dense symmetric positive-definite solves.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for lane in 0..4 {
            acc[lane] += a[4 * k + lane] * b[4 * k + lane];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

impl Cholesky {
    /// Factors a symmetric matrix; only the lower triangle is read.
    pub fn factor(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
        }
        let mut l = Array2::<f64>::zeros((n, n));
        let buf = l.as_slice_mut().expect("standard layout");
        for i in 0..n {
            for j in 0..=i {
                let (row_i, row_j) = (&buf[i * n..i * n + j], &buf[j * n..j * n + j]);
                let s = a[[i, j]] - dot(row_i, row_j);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Singular(format!("matrix is not positive definite (pivot {i}: {s:e})")));
                    }
                    buf[i * n + i] = s.sqrt();
                } else {
                    buf[i * n + j] = s / buf[j * n + j];
                }
            }
        }
        Ok(Self { l })
    }

    pub fn factor_lower(&self) -> &Array2<f64> {
        &self.l
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: ArrayView2<'_, f64>) -> Array2<f64> {
        let n = self.l.nrows();
        assert_eq!(b.nrows(), n, "right-hand side has wrong row count");
        // Work on Bᵀ so each right-hand side is a contiguous row.
        let mut x = b.t().as_standard_layout().into_owned();
        let l = self.l.as_slice().expect("standard layout");
        for mut col in x.rows_mut() {
            let v = col.as_slice_mut().expect("contiguous row");
            for i in 0..n {
                let s = v[i] - dot(&l[i * n..i * n + i], &v[..i]);
                v[i] = s / l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = v[i];
                for k in i + 1..n {
                    s -= l[k * n + i] * v[k];
                }
                v[i] = s / l[i * n + i];
            }
        }
        x.reversed_axes().as_standard_layout().into_owned()
    }
}

/// Solves `A X = B` for symmetric positive-definite `A`.
pub fn spd_solve(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    Ok(Cholesky::factor(a)?.solve(b))
}

/// ‖A X − B‖_F / ‖B‖_F.
pub fn relative_residual(a: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let r = a.dot(&x) - b;
    let num = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let den = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
