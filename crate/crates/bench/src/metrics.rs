//! Cycle-weighted regression metrics. Every quantity is averaged within a
//! cycle first and then across cycles, so long and short cycles weigh the
//! same.

use ndarray::ArrayView2;
use serde::Serialize;

use crate::error::{BenchError, Result};

/// Name used for the row that averages all targets.
pub const MEAN_TARGET: &str = "mean";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetMetrics {
    pub target: String,
    pub mse: f64,
    pub nmse: f64,
    pub mae: f64,
    pub r2: f64,
    /// Cycle-weighted target variance about the cycle-weighted mean.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleMetrics {
    pub cycle_id: u64,
    pub rows: usize,
    /// Per target.
    pub mse: Vec<f64>,
    pub mae: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// One entry per target, then the [`MEAN_TARGET`] row.
    pub targets: Vec<TargetMetrics>,
    pub cycles: Vec<CycleMetrics>,
}

impl MetricsReport {
    /// The row averaging all targets.
    pub fn mean(&self) -> &TargetMetrics {
        self.targets.last().expect("a report always has the mean row")
    }

    pub fn target(&self, name: &str) -> Option<&TargetMetrics> {
        self.targets.iter().find(|t| t.target == name)
    }
}

/// One prediction/target pair per cycle, rows already restricted to the
/// scored time points. Cycles without rows are skipped.
///
/// The averaged row holds the arithmetic mean of the per-target MSE, NMSE
/// and MAE; its R² is `1 - nmse` like every other row.
pub fn mse_metrics(
    predictions: &[ArrayView2<'_, f64>],
    targets: &[ArrayView2<'_, f64>],
    cycle_ids: &[u64],
    target_names: &[String],
) -> Result<MetricsReport> {
    if predictions.len() != targets.len() || targets.len() != cycle_ids.len() {
        return Err(BenchError::Experiment(format!(
            "{} prediction blocks, {} target blocks, {} cycle ids",
            predictions.len(),
            targets.len(),
            cycle_ids.len()
        )));
    }
    let d = target_names.len();
    let mut cycles = Vec::new();
    let mut cycle_means = Vec::new();
    for ((p, y), &id) in predictions.iter().zip(targets).zip(cycle_ids) {
        if p.dim() != y.dim() || y.ncols() != d {
            return Err(BenchError::Experiment(format!(
                "cycle {id}: predictions {:?} vs targets {:?} ({d} targets expected)",
                p.dim(),
                y.dim()
            )));
        }
        let n = y.nrows();
        if n == 0 {
            continue;
        }
        let mut mse = vec![0.0; d];
        let mut mae = vec![0.0; d];
        let mut mean = vec![0.0; d];
        for (pr, yr) in p.rows().into_iter().zip(y.rows()) {
            for j in 0..d {
                let e = pr[j] - yr[j];
                mse[j] += e * e;
                mae[j] += e.abs();
                mean[j] += yr[j];
            }
        }
        for j in 0..d {
            mse[j] /= n as f64;
            mae[j] /= n as f64;
            mean[j] /= n as f64;
        }
        cycles.push(CycleMetrics { cycle_id: id, rows: n, mse, mae });
        cycle_means.push(mean);
    }
    if cycles.is_empty() {
        return Err(BenchError::Experiment("no scored rows in any cycle".into()));
    }
    let n_cycles = cycles.len() as f64;
    let global: Vec<f64> = (0..d).map(|j| cycle_means.iter().map(|m| m[j]).sum::<f64>() / n_cycles).collect();
    let mut variance = vec![0.0; d];
    for y in targets.iter().filter(|y| y.nrows() > 0) {
        for j in 0..d {
            let col = y.column(j);
            variance[j] += col.iter().map(|v| (v - global[j]).powi(2)).sum::<f64>() / col.len() as f64;
        }
    }
    let mut rows = Vec::with_capacity(d + 1);
    for (j, name) in target_names.iter().enumerate() {
        let var = variance[j] / n_cycles;
        if !(var > 0.0) {
            return Err(BenchError::Experiment(format!("target '{name}' is constant; NMSE is undefined")));
        }
        let mse = cycles.iter().map(|c| c.mse[j]).sum::<f64>() / n_cycles;
        let mae = cycles.iter().map(|c| c.mae[j]).sum::<f64>() / n_cycles;
        let nmse = mse / var;
        rows.push(TargetMetrics { target: name.clone(), mse, nmse, mae, r2: 1.0 - nmse, variance: var });
    }
    let avg = |f: fn(&TargetMetrics) -> f64| rows.iter().map(f).sum::<f64>() / d as f64;
    let nmse = avg(|t| t.nmse);
    let mean_row = TargetMetrics {
        target: MEAN_TARGET.into(),
        mse: avg(|t| t.mse),
        nmse,
        mae: avg(|t| t.mae),
        r2: 1.0 - nmse,
        variance: avg(|t| t.variance),
    };
    rows.push(mean_row);
    Ok(MetricsReport { targets: rows, cycles })
}
