//! Learning curves: nested, cycle-aligned training subsets scored against
//! one fixed test set.

use cyclecast::dataset::CycleDataset;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};
use crate::metrics::MetricsReport;
use crate::models::ModelSpec;
use crate::pipeline::fit;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub model: String,
    pub fraction: f64,
    pub train_cycles: Vec<u64>,
    pub train: MetricsReport,
    pub test: MetricsReport,
}

/// Training-cycle ids for each fraction. One seeded ordering of the cycles
/// is cut at `round(f · N)`, so smaller subsets are prefixes of larger ones.
pub fn nested_subsets(train: &CycleDataset, fractions: &[f64], seed: u64) -> Result<Vec<Vec<u64>>> {
    let mut order = train.ids();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, "curve/order")));
    fractions
        .iter()
        .map(|&f| {
            if !(f > 0.0 && f <= 1.0) {
                return Err(BenchError::Experiment(format!("fraction {f} outside (0, 1]")));
            }
            let n = (f * order.len() as f64).round() as usize;
            if n == 0 {
                return Err(BenchError::Experiment(format!("fraction {f} of {} cycles selects none", order.len())));
            }
            Ok(order[..n].to_vec())
        })
        .collect()
}

/// Fits every model on every subset. The model seed does not depend on the
/// fraction, so fraction 1.0 equals a plain train/test run with `seed`.
pub fn learning_curve(
    train: &CycleDataset,
    test: &CycleDataset,
    fractions: &[f64],
    models: &[ModelSpec],
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    let subsets = nested_subsets(train, fractions, seed)?;
    let mut points = Vec::new();
    for spec in models {
        for (&fraction, ids) in fractions.iter().zip(&subsets) {
            let subset = train.select(ids);
            let model = fit(spec, &subset, seed)?;
            let (train_report, _) = model.evaluate(&subset)?;
            let (test_report, _) = model.evaluate(test)?;
            log::info!(
                "{} at fraction {fraction}: train NMSE {:.4}, test NMSE {:.4}",
                spec.kind(),
                train_report.mean().nmse,
                test_report.mean().nmse
            );
            points.push(CurvePoint {
                model: spec.kind().to_string(),
                fraction,
                train_cycles: ids.clone(),
                train: train_report,
                test: test_report,
            });
        }
    }
    Ok(points)
}
