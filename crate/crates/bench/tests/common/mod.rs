#![allow(dead_code)]

use cyclecast::dataset::CycleDataset;
use cyclecast::reactor::{generate_dataset, GeneratorConfig};

/// A short simulated plant history.
pub fn synthetic(cycles: usize, seed: u64) -> CycleDataset {
    let cfg = GeneratorConfig { max_cycles: Some(cycles), seed, ..Default::default() };
    generate_dataset(&cfg).unwrap().to_dataset()
}
