use ndarray::{s, Array2};

use super::CycleDataset;
use crate::error::Result;

/// Lagged inputs of one cycle. Row `r` holds time index `r + lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedCycle {
    pub id: u64,
    /// (T - lag) × (lag + 1)·d_x, newest block first.
    pub features: Array2<f64>,
    pub targets: Array2<f64>,
    pub lag: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedView {
    pub lag: usize,
    pub n_inputs: usize,
    pub cycles: Vec<WindowedCycle>,
    /// Cycles too short to produce a single row.
    pub dropped: Vec<u64>,
}

impl WindowedView {
    pub fn n_features(&self) -> usize {
        (self.lag + 1) * self.n_inputs
    }

    pub fn n_rows(&self) -> usize {
        self.cycles.iter().map(|c| c.features.nrows()).sum()
    }

    /// All rows of all cycles stacked, skipping rows before time index
    /// `start` in every cycle.
    pub fn stacked_from(&self, start: usize) -> (Array2<f64>, Array2<f64>) {
        let skip = start.saturating_sub(self.lag);
        let n: usize = self.cycles.iter().map(|c| c.features.nrows().saturating_sub(skip)).sum();
        let d_y = self.cycles.first().map_or(0, |c| c.targets.ncols());
        let mut x = Array2::zeros((n, self.n_features()));
        let mut y = Array2::zeros((n, d_y));
        let mut at = 0;
        for c in &self.cycles {
            let rows = c.features.nrows().saturating_sub(skip);
            if rows == 0 {
                continue;
            }
            x.slice_mut(s![at..at + rows, ..]).assign(&c.features.slice(s![skip.., ..]));
            y.slice_mut(s![at..at + rows, ..]).assign(&c.targets.slice(s![skip.., ..]));
            at += rows;
        }
        (x, y)
    }

    pub fn stacked(&self) -> (Array2<f64>, Array2<f64>) {
        self.stacked_from(self.lag)
    }
}

/// Stacks `[x(t); x(t-1); …; x(t-lag)]` for every `t >= lag`.
pub fn window_stack(dataset: &CycleDataset, lag: usize) -> Result<WindowedView> {
    let d = dataset.n_inputs();
    let mut cycles = Vec::with_capacity(dataset.len());
    let mut dropped = Vec::new();
    for c in &dataset.cycles {
        if c.len() <= lag {
            log::warn!("cycle {} has {} rows, fewer than the {}-hour window; dropped", c.id, c.len(), lag + 1);
            dropped.push(c.id);
            continue;
        }
        let rows = c.len() - lag;
        let mut features = Array2::zeros((rows, (lag + 1) * d));
        for r in 0..rows {
            let t = r + lag;
            for j in 0..=lag {
                features
                    .slice_mut(s![r, j * d..(j + 1) * d])
                    .assign(&c.inputs.row(t - j));
            }
        }
        cycles.push(WindowedCycle {
            id: c.id,
            features,
            targets: c.targets.slice(s![lag.., ..]).to_owned(),
            lag,
        });
    }
    Ok(WindowedView { lag, n_inputs: d, cycles, dropped })
}
