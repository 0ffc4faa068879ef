use ndarray::{s, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sgd::{split_validation_cycles, train_loop, SgdConfig, TrainHistory};
use super::Activation;
use crate::dataset::WindowedView;
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Multilayer perceptron with a linear output layer. Parameters live in one
/// flat buffer, layer by layer: `W_l` (out × in, row-major) then `b_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfnnModel {
    /// Input width, hidden widths, output width.
    pub sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub dropout: f64,
    pub params: Vec<f64>,
}

fn layer_offsets(sizes: &[usize]) -> Vec<usize> {
    let mut offs = vec![0];
    for w in sizes.windows(2) {
        let last = *offs.last().unwrap();
        offs.push(last + w[0] * w[1] + w[1]);
    }
    offs
}

impl FfnnModel {
    /// Uniform fan-in initialization, U(−1/√fan_in, 1/√fan_in), for weights
    /// and biases alike.
    pub fn new(sizes: &[usize], hidden_activation: Activation, dropout: f64, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|s| *s == 0) {
            return Err(Error::InvalidParameters(format!("layer sizes {sizes:?} must be >= 2 positive widths")));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidParameters(format!("dropout must be in [0, 1), got {dropout}")));
        }
        let n = *layer_offsets(sizes).last().unwrap();
        let mut params = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offs = layer_offsets(sizes);
        for (l, w) in sizes.windows(2).enumerate() {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for p in &mut params[offs[l]..offs[l + 1]] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(Self { sizes: sizes.to_vec(), hidden_activation, dropout, params })
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn weight(&self, l: usize) -> ArrayView2<'_, f64> {
        layer_weight(&self.sizes, &self.params, l)
    }

    pub fn bias(&self, l: usize) -> ArrayView1<'_, f64> {
        layer_bias(&self.sizes, &self.params, l)
    }

    pub fn set_output_bias(&mut self, values: &[f64]) -> Result<()> {
        check_dim(self.n_outputs(), values.len())?;
        let l = self.n_layers() - 1;
        let off = layer_offsets(&self.sizes)[l] + self.sizes[l] * self.sizes[l + 1];
        self.params[off..off + values.len()].copy_from_slice(values);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(*layer_offsets(&self.sizes).last().unwrap(), self.params.len())
    }
}

fn layer_weight<'a>(sizes: &[usize], params: &'a [f64], l: usize) -> ArrayView2<'a, f64> {
    let off = layer_offsets(sizes)[l];
    let (i, o) = (sizes[l], sizes[l + 1]);
    ArrayView2::from_shape((o, i), &params[off..off + o * i]).unwrap()
}

fn layer_bias<'a>(sizes: &[usize], params: &'a [f64], l: usize) -> ArrayView1<'a, f64> {
    let off = layer_offsets(sizes)[l] + sizes[l] * sizes[l + 1];
    ArrayView1::from(&params[off..off + sizes[l + 1]])
}

/// Activations kept by a training forward pass.
#[derive(Debug, Clone)]
pub struct FfnnCache {
    /// Layer inputs: the batch itself, then each hidden output after dropout.
    pub inputs: Vec<Array2<f64>>,
    /// Hidden outputs before dropout.
    pub hidden: Vec<Array2<f64>>,
    /// Inverted-dropout multipliers (0 or 1/(1−p)); empty when p = 0.
    pub masks: Vec<Array2<f64>>,
}

struct Net<'a> {
    sizes: &'a [usize],
    act: Activation,
    dropout: f64,
    params: &'a [f64],
}

impl Net<'_> {
    fn forward<R: Rng>(&self, x: ArrayView2<'_, f64>, mode: Mode, rng: &mut R) -> Result<(Array2<f64>, FfnnCache)> {
        check_dim(self.sizes[0], x.ncols())?;
        let n_layers = self.sizes.len() - 1;
        let mut cache = FfnnCache { inputs: vec![x.to_owned()], hidden: Vec::new(), masks: Vec::new() };
        let drop = mode == Mode::Train && self.dropout > 0.0;
        let keep_scale = 1.0 / (1.0 - self.dropout);
        for l in 0..n_layers {
            let w = layer_weight(self.sizes, self.params, l);
            let b = layer_bias(self.sizes, self.params, l);
            let mut z = cache.inputs[l].dot(&w.t());
            z += &b;
            if l + 1 == n_layers {
                return Ok((z, cache));
            }
            z.mapv_inplace(|v| self.act.apply(v));
            if drop {
                let mask = Array2::from_shape_fn(z.raw_dim(), |_| {
                    if rng.random::<f64>() < self.dropout {
                        0.0
                    } else {
                        keep_scale
                    }
                });
                let out = &z * &mask;
                cache.hidden.push(z);
                cache.masks.push(mask);
                cache.inputs.push(out);
            } else {
                cache.hidden.push(z.clone());
                cache.inputs.push(z);
            }
        }
        unreachable!("loop returns at the output layer")
    }

    /// Mean squared error over rows and outputs; writes its gradient.
    fn loss_and_grad<R: Rng>(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView2<'_, f64>,
        mode: Mode,
        rng: &mut R,
        grad: &mut [f64],
    ) -> Result<f64> {
        check_dim(x.nrows(), y.nrows())?;
        check_dim(*self.sizes.last().unwrap(), y.ncols())?;
        check_dim(self.params.len(), grad.len())?;
        let (out, cache) = self.forward(x, mode, rng)?;
        let count = (y.nrows() * y.ncols()) as f64;
        let diff = &out - &y;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
        let mut delta = diff * (2.0 / count);
        let offs = layer_offsets(self.sizes);
        let n_layers = self.sizes.len() - 1;
        for l in (0..n_layers).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let w_off = offs[l];
            {
                let (gw, gb) = grad[w_off..offs[l + 1]].split_at_mut(o * i);
                let mut gw = ArrayViewMut2::from_shape((o, i), gw).unwrap();
                ndarray::linalg::general_mat_mul(1.0, &delta.t(), &cache.inputs[l], 0.0, &mut gw);
                ArrayViewMut1::from(gb).assign(&delta.sum_axis(Axis(0)));
            }
            if l == 0 {
                break;
            }
            let w = layer_weight(self.sizes, self.params, l);
            let mut upstream = delta.dot(&w);
            if !cache.masks.is_empty() {
                upstream *= &cache.masks[l - 1];
            }
            let hidden = &cache.hidden[l - 1];
            ndarray::Zip::from(&mut upstream)
                .and(hidden)
                .for_each(|d, a| *d *= self.act.derivative_from_output(*a));
            delta = upstream;
        }
        Ok(loss)
    }
}

impl FfnnModel {
    fn net(&self) -> Net<'_> {
        self.net_with(&self.params)
    }

    fn net_with<'a>(&'a self, params: &'a [f64]) -> Net<'a> {
        Net { sizes: &self.sizes, act: self.hidden_activation, dropout: self.dropout, params }
    }
}

/// Forward pass. Training mode applies inverted dropout after every hidden
/// activation; evaluation mode is deterministic and ignores `rng`.
pub fn ffnn_forward<R: Rng>(model: &FfnnModel, x: ArrayView2<'_, f64>, mode: Mode, rng: &mut R) -> Result<Array2<f64>> {
    Ok(model.net().forward(x, mode, rng)?.0)
}

/// Mean squared error of a batch and its gradient with respect to
/// `params` (same layout as `model.params`).
pub fn ffnn_loss_and_grad<R: Rng>(
    model: &FfnnModel,
    params: &[f64],
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    mode: Mode,
    rng: &mut R,
    grad: &mut [f64],
) -> Result<f64> {
    check_dim(model.params.len(), params.len())?;
    model.net_with(params).loss_and_grad(x, y, mode, rng, grad)
}

/// Two-level mean squared error: per-cycle mean first, then over cycles.
pub(crate) fn cycle_mse(preds: &[Array2<f64>], targets: &[ArrayView2<'_, f64>]) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for (p, t) in preds.iter().zip(targets) {
        if t.is_empty() {
            continue;
        }
        let se: f64 = p.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        total += se / t.len() as f64;
        n += 1;
    }
    total / n.max(1) as f64
}

/// Trains on windowed rows; a seeded share of the cycles is held out for
/// early stopping. Returns the per-epoch history; `model` ends at the best
/// validation epoch.
pub fn ffnn_train(model: &mut FfnnModel, train: &WindowedView, cfg: &SgdConfig) -> Result<TrainHistory> {
    model.validate()?;
    check_dim(model.n_inputs(), train.n_features())?;
    let (tr, val) = split_validation_cycles(train.cycles.len(), cfg.validation_fraction, cfg.seed)?;
    let d_in = train.n_features();
    let d_out = model.n_outputs();
    let n_rows: usize = tr.iter().map(|&i| train.cycles[i].features.nrows()).sum();
    if n_rows == 0 {
        return Err(Error::InvalidInput("no windowed training rows".into()));
    }
    let mut x = Array2::zeros((n_rows, d_in));
    let mut y = Array2::zeros((n_rows, d_out));
    let mut r = 0;
    for &i in &tr {
        let c = &train.cycles[i];
        let n = c.features.nrows();
        x.slice_mut(s![r..r + n, ..]).assign(&c.features);
        y.slice_mut(s![r..r + n, ..]).assign(&c.targets);
        r += n;
    }
    let val_cycles: Vec<_> = val.iter().map(|&i| &train.cycles[i]).collect();

    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut params = model.params.clone();
    let meta = model.clone();
    let mut xb = Array2::zeros((0, d_in));
    let mut yb = Array2::zeros((0, d_out));
    let history = train_loop(
        &mut params,
        n_rows,
        cfg,
        |p, batch, g| {
            xb = x.select(Axis(0), batch);
            yb = y.select(Axis(0), batch);
            meta.net_with(p).loss_and_grad(xb.view(), yb.view(), Mode::Train, &mut dropout_rng, g)
        },
        |p| {
            let net = meta.net_with(p);
            let mut unused = ChaCha8Rng::seed_from_u64(0);
            let mut preds = Vec::with_capacity(val_cycles.len());
            for c in &val_cycles {
                preds.push(net.forward(c.features.view(), Mode::Eval, &mut unused)?.0);
            }
            let targets: Vec<_> = val_cycles.iter().map(|c| c.targets.view()).collect();
            Ok(cycle_mse(&preds, &targets))
        },
    )?;
    model.params = params;
    Ok(history)
}
