use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Share of training cycles held out for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            momentum: 0.95,
            batch_size: 64,
            max_epochs: 200,
            patience: 6,
            validation_fraction: 0.15,
            seed: 0,
            clip_norm: Some(5.0),
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameters(m));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        if self.patience == 0 {
            return bad("patience must be >= 1".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation_fraction must be in (0, 1), got {}", self.validation_fraction));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad(format!("clip_norm must be > 0, got {c}"));
            }
        }
        Ok(())
    }
}

/// Nesterov momentum in its lookahead form: the gradient is taken at
/// θ + μv, then v ← μv − η∇ and θ ← θ + v.
#[derive(Debug, Clone)]
pub struct Nesterov {
    pub velocity: Vec<f64>,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Nesterov {
    pub fn new(n_params: usize, learning_rate: f64, momentum: f64) -> Self {
        Self { velocity: vec![0.0; n_params], learning_rate, momentum }
    }

    pub fn lookahead(&self, params: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(params.iter().zip(&self.velocity).map(|(p, v)| p + self.momentum * v));
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, v), g) in params.iter_mut().zip(self.velocity.iter_mut()).zip(grad) {
            *v = self.momentum * *v - self.learning_rate * g;
            *p += *v;
        }
    }
}

/// Rescales `grad` in place so its Euclidean norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_by_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Seeded split of `n` cycle positions into (train, validation), both sorted.
pub fn split_validation_cycles(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 training cycles for a validation split, got {n}")));
    }
    let n_val = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Minibatch loop shared by both networks.
///
/// `batch_grad(params, batch, grad)` overwrites `grad` with the gradient of
/// the batch loss at `params` and returns that loss; `val_loss(params)`
/// scores the held-out cycles. On return `params` holds the best validation
/// epoch.
pub fn train_loop<F, V>(
    params: &mut Vec<f64>,
    n_units: usize,
    cfg: &SgdConfig,
    mut batch_grad: F,
    mut val_loss: V,
) -> Result<TrainHistory>
where
    F: FnMut(&[f64], &[usize], &mut [f64]) -> Result<f64>,
    V: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    if n_units == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_ba7c);
    let mut opt = Nesterov::new(params.len(), cfg.learning_rate, cfg.momentum);
    let mut order: Vec<usize> = (0..n_units).collect();
    let mut look = Vec::with_capacity(params.len());
    let mut grad = vec![0.0; params.len()];
    let mut history = TrainHistory { best_val_loss: f64::INFINITY, ..Default::default() };
    let mut best = params.clone();
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            opt.lookahead(params, &mut look);
            let loss = batch_grad(&look, batch, &mut grad)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite loss {loss} in epoch {epoch}; try a smaller learning rate than {}",
                    cfg.learning_rate
                )));
            }
            if let Some(c) = cfg.clip_norm {
                clip_by_norm(&mut grad, c);
            }
            opt.step(params, &grad);
            loss_sum += loss * batch.len() as f64;
        }
        let val = val_loss(params)?;
        if !val.is_finite() {
            return Err(Error::Training(format!(
                "validation loss diverged to {val} in epoch {epoch}; try a smaller learning rate than {}",
                cfg.learning_rate
            )));
        }
        let train_loss = loss_sum / n_units as f64;
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val:.6}");
        history.epochs.push(EpochRecord { epoch, train_loss, val_loss: val });
        if val < history.best_val_loss {
            history.best_val_loss = val;
            history.best_epoch = epoch;
            best.copy_from_slice(params);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    params.copy_from_slice(&best);
    Ok(history)
}
