use serde::{Deserialize, Serialize};

use super::CycleDataset;
use crate::error::{Error, Result};

/// Per-input-column affine scaling to zero mean and unit variance. Targets are
/// left untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Fits column statistics over all rows of all cycles (population variance).
/// A constant column gets std 1 so it maps to all zeros.
pub fn fit_standardizer(train: &CycleDataset) -> Result<Standardizer> {
    let rows = train.total_rows();
    if rows == 0 {
        return Err(Error::InvalidInput("cannot fit a standardizer on an empty dataset".into()));
    }
    let d = train.n_inputs();
    let mut means = vec![0.0; d];
    for c in &train.cycles {
        for row in c.inputs.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
    }
    for m in &mut means {
        *m /= rows as f64;
    }
    let mut vars = vec![0.0; d];
    for c in &train.cycles {
        for row in c.inputs.rows() {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
    }
    let stds = vars
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let sd = (s / rows as f64).sqrt();
            if sd > 1e-12 * means[j].abs().max(1.0) {
                sd
            } else {
                log::warn!("input column '{}' is constant; leaving it unscaled", train.schema.inputs[j].name);
                1.0
            }
        })
        .collect();
    Ok(Standardizer { means, stds })
}

impl Standardizer {
    pub fn apply(&self, dataset: &CycleDataset) -> Result<CycleDataset> {
        self.map(dataset, |v, m, s| (v - m) / s)
    }

    pub fn invert(&self, dataset: &CycleDataset) -> Result<CycleDataset> {
        self.map(dataset, |v, m, s| v * s + m)
    }

    /// Scales one row in place.
    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
            *v = (*v - m) / s;
        }
    }

    fn map(&self, dataset: &CycleDataset, f: impl Fn(f64, f64, f64) -> f64) -> Result<CycleDataset> {
        crate::error::check_dim(self.means.len(), dataset.n_inputs())?;
        let mut out = dataset.clone();
        for c in &mut out.cycles {
            for mut row in c.inputs.rows_mut() {
                for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
                    *v = f(*v, *m, *s);
                }
            }
        }
        Ok(out)
    }
}
