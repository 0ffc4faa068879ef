use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CycleDataset;
use crate::error::{Error, Result};

/// How to partition a dataset into training and test cycles.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitSpec {
    /// `round(test_fraction · N)` randomly chosen test cycles.
    Random { test_fraction: f64, seed: u64 },
    /// Listed cycles only; unlisted cycles end up in neither part.
    Explicit { train: Vec<u64>, test: Vec<u64> },
    /// Cycles of the given catalyst charges form the test set.
    ByCharge { test_charges: Vec<u64> },
}

/// Cycle-disjoint train/test partition. Both parts keep dataset order.
pub fn split_by_cycles(dataset: &CycleDataset, spec: &SplitSpec) -> Result<(CycleDataset, CycleDataset)> {
    let ids = dataset.ids();
    let (train, test): (Vec<u64>, Vec<u64>) = match spec {
        SplitSpec::Random { test_fraction, seed } => {
            if !(0.0..=1.0).contains(test_fraction) {
                return Err(Error::InvalidParameters(format!("test fraction {test_fraction} outside [0, 1]")));
            }
            let n_test = (test_fraction * ids.len() as f64).round() as usize;
            let mut shuffled = ids.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let test: HashSet<u64> = shuffled[..n_test].iter().copied().collect();
            ids.iter().partition(|id| !test.contains(id))
        }
        SplitSpec::Explicit { train, test } => {
            let known: HashSet<u64> = ids.iter().copied().collect();
            let train_set: HashSet<u64> = train.iter().copied().collect();
            if let Some(id) = train.iter().chain(test).find(|id| !known.contains(id)) {
                return Err(Error::InvalidParameters(format!("unknown cycle id {id}")));
            }
            if let Some(id) = test.iter().find(|id| train_set.contains(id)) {
                return Err(Error::InvalidParameters(format!("cycle {id} is in both splits")));
            }
            (train.clone(), test.clone())
        }
        SplitSpec::ByCharge { test_charges } => {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for c in &dataset.cycles {
                let charge = c.charge.ok_or_else(|| {
                    Error::InvalidParameters(format!("cycle {} has no charge id", c.id))
                })?;
                if test_charges.contains(&charge) {
                    test.push(c.id);
                } else {
                    train.push(c.id);
                }
            }
            (train, test)
        }
    };
    Ok((dataset.select(&train), dataset.select(&test)))
}
