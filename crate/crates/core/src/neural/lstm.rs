use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use ndarray::linalg::general_mat_mul;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ffnn::cycle_mse;
use super::sgd::{split_validation_cycles, train_loop, SgdConfig, TrainHistory};
use super::sigmoid;
use crate::dataset::CycleDataset;
use crate::error::{check_dim, Error, Result};

/// Single-layer LSTM with a linear readout.
///
/// Flat parameter layout: gate weights `W` (4m × (m + d), columns ordered
/// `[h; x]`, row blocks forget, input, candidate, output), gate biases (4m),
/// readout `W_o` (d_y × m), readout bias (d_y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub n_inputs: usize,
    pub hidden: usize,
    pub n_outputs: usize,
    pub params: Vec<f64>,
}

struct Layout {
    m: usize,
    d: usize,
    dy: usize,
}

impl Layout {
    fn gate_w(&self) -> std::ops::Range<usize> {
        0..4 * self.m * (self.m + self.d)
    }
    fn gate_b(&self) -> std::ops::Range<usize> {
        let s = self.gate_w().end;
        s..s + 4 * self.m
    }
    fn out_w(&self) -> std::ops::Range<usize> {
        let s = self.gate_b().end;
        s..s + self.dy * self.m
    }
    fn out_b(&self) -> std::ops::Range<usize> {
        let s = self.out_w().end;
        s..s + self.dy
    }
    fn len(&self) -> usize {
        self.out_b().end
    }
}

struct Views<'a> {
    w: ArrayView2<'a, f64>,
    b: ArrayView1<'a, f64>,
    wo: ArrayView2<'a, f64>,
    bo: ArrayView1<'a, f64>,
}

impl LstmModel {
    /// All parameters U(−1/√m, 1/√m); readout bias 0.
    pub fn new(n_inputs: usize, hidden: usize, n_outputs: usize, seed: u64) -> Result<Self> {
        if n_inputs == 0 || hidden == 0 || n_outputs == 0 {
            return Err(Error::InvalidParameters(format!(
                "LSTM sizes must be positive, got d={n_inputs}, m={hidden}, d_y={n_outputs}"
            )));
        }
        let lay = Layout { m: hidden, d: n_inputs, dy: n_outputs };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut params: Vec<f64> = (0..lay.len()).map(|_| rng.random_range(-bound..bound)).collect();
        params[lay.out_b()].fill(0.0);
        Ok(Self { n_inputs, hidden, n_outputs, params })
    }

    fn layout(&self) -> Layout {
        Layout { m: self.hidden, d: self.n_inputs, dy: self.n_outputs }
    }

    fn views<'a>(&self, params: &'a [f64]) -> Views<'a> {
        let lay = self.layout();
        let (m, d, dy) = (lay.m, lay.d, lay.dy);
        Views {
            w: ArrayView2::from_shape((4 * m, m + d), &params[lay.gate_w()]).unwrap(),
            b: ArrayView1::from(&params[lay.gate_b()]),
            wo: ArrayView2::from_shape((dy, m), &params[lay.out_w()]).unwrap(),
            bo: ArrayView1::from(&params[lay.out_b()]),
        }
    }

    pub fn gate_weights(&self) -> ArrayView2<'_, f64> {
        self.views(&self.params).w
    }

    pub fn gate_biases(&self) -> ArrayView1<'_, f64> {
        self.views(&self.params).b
    }

    pub fn readout_weights(&self) -> ArrayView2<'_, f64> {
        self.views(&self.params).wo
    }

    pub fn readout_bias(&self) -> ArrayView1<'_, f64> {
        self.views(&self.params).bo
    }

    pub fn gate_biases_mut(&mut self) -> ArrayViewMut1<'_, f64> {
        let r = self.layout().gate_b();
        ArrayViewMut1::from(&mut self.params[r])
    }

    pub fn gate_weights_mut(&mut self) -> ArrayViewMut2<'_, f64> {
        let lay = self.layout();
        let shape = (4 * lay.m, lay.m + lay.d);
        ArrayViewMut2::from_shape(shape, &mut self.params[lay.gate_w()]).unwrap()
    }

    pub fn set_readout_bias(&mut self, values: &[f64]) -> Result<()> {
        check_dim(self.n_outputs, values.len())?;
        let r = self.layout().out_b();
        self.params[r].copy_from_slice(values);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.layout().len(), self.params.len())
    }
}

/// One recurrence step for a single sample.
///
/// f = σ(W_f[h;x]+b_f), i = σ(W_i[h;x]+b_i), c̃ = tanh(W_c[h;x]+b_c),
/// c = c_prev⊙f + c̃⊙i, o = σ(W_h[h;x]+b_h), h = o⊙tanh(c).
pub fn lstm_cell_step(
    model: &LstmModel,
    h_prev: ArrayView1<'_, f64>,
    c_prev: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let m = model.hidden;
    check_dim(m, h_prev.len())?;
    check_dim(m, c_prev.len())?;
    check_dim(model.n_inputs, x.len())?;
    let v = model.views(&model.params);
    let mut z = v.w.slice(s![.., ..m]).dot(&h_prev) + v.w.slice(s![.., m..]).dot(&x);
    z += &v.b;
    let mut h = Array1::zeros(m);
    let mut c = Array1::zeros(m);
    for k in 0..m {
        let f = sigmoid(z[k]);
        let i = sigmoid(z[m + k]);
        let cand = z[2 * m + k].tanh();
        let o = sigmoid(z[3 * m + k]);
        c[k] = c_prev[k] * f + cand * i;
        h[k] = o * c[k].tanh();
    }
    Ok((h, c))
}

/// Sequences trained together. Loss is taken on steps `t >= loss_start[b]`.
#[derive(Debug, Clone)]
pub struct SequenceBatch<'a> {
    pub inputs: Vec<ArrayView2<'a, f64>>,
    pub targets: Vec<ArrayView2<'a, f64>>,
    pub loss_start: Vec<usize>,
}

/// Per-step activations of a batched forward pass. Sequences are sorted by
/// decreasing length so step `t` only touches the first `active[t]` rows.
struct Trace {
    order: Vec<usize>,
    active: Vec<usize>,
    xs: Vec<Array2<f64>>,
    /// σ/tanh-activated gates per step, active × 4m.
    gates: Vec<Array2<f64>>,
    cells: Vec<Array2<f64>>,
    tanh_cells: Vec<Array2<f64>>,
    hiddens: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

fn forward_batch(model: &LstmModel, params: &[f64], inputs: &[ArrayView2<'_, f64>], keep: bool) -> Result<Trace> {
    let (m, d) = (model.hidden, model.n_inputs);
    for x in inputs {
        check_dim(d, x.ncols())?;
    }
    let v = model.views(params);
    let wh = v.w.slice(s![.., ..m]);
    let wx = v.w.slice(s![.., m..]);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.sort_by_key(|&b| std::cmp::Reverse(inputs[b].nrows()));
    let t_max = order.first().map_or(0, |&b| inputs[b].nrows());
    let active: Vec<usize> = (0..t_max).map(|t| order.iter().take_while(|&&b| inputs[b].nrows() > t).count()).collect();

    let n0 = order.len();
    let mut h = Array2::<f64>::zeros((n0, m));
    let mut c = Array2::<f64>::zeros((n0, m));
    let mut trace = Trace {
        order,
        active,
        xs: Vec::new(),
        gates: Vec::new(),
        cells: Vec::new(),
        tanh_cells: Vec::new(),
        hiddens: Vec::new(),
        outputs: Vec::with_capacity(t_max),
    };
    for t in 0..t_max {
        let n = trace.active[t];
        let mut x = Array2::zeros((n, d));
        for (r, &b) in trace.order[..n].iter().enumerate() {
            x.row_mut(r).assign(&inputs[b].row(t));
        }
        let mut z = Array2::zeros((n, 4 * m));
        z += &v.b;
        general_mat_mul(1.0, &x, &wx.t(), 1.0, &mut z);
        general_mat_mul(1.0, &h.slice(s![..n, ..]), &wh.t(), 1.0, &mut z);
        let mut c_new = Array2::zeros((n, m));
        let mut tc = Array2::zeros((n, m));
        let mut h_new = Array2::zeros((n, m));
        for r in 0..n {
            let mut zr = z.row_mut(r);
            let zs = zr.as_slice_mut().unwrap();
            for k in 0..m {
                zs[k] = sigmoid(zs[k]);
                zs[m + k] = sigmoid(zs[m + k]);
                zs[2 * m + k] = zs[2 * m + k].tanh();
                zs[3 * m + k] = sigmoid(zs[3 * m + k]);
                let cv = c[[r, k]] * zs[k] + zs[2 * m + k] * zs[m + k];
                let tv = cv.tanh();
                c_new[[r, k]] = cv;
                tc[[r, k]] = tv;
                h_new[[r, k]] = zs[3 * m + k] * tv;
            }
        }
        let mut y = h_new.dot(&v.wo.t());
        y += &v.bo;
        trace.outputs.push(y);
        h.slice_mut(s![..n, ..]).assign(&h_new);
        c.slice_mut(s![..n, ..]).assign(&c_new);
        if keep {
            trace.xs.push(x);
            trace.gates.push(z);
            trace.cells.push(c_new);
            trace.tanh_cells.push(tc);
            trace.hiddens.push(h_new);
        }
    }
    Ok(trace)
}

/// Per-sequence predictions from a batched forward pass.
fn unpack_outputs(trace: &Trace, lens: &[usize], dy: usize) -> Vec<Array2<f64>> {
    let mut out: Vec<Array2<f64>> = lens.iter().map(|&l| Array2::zeros((l, dy))).collect();
    for (t, y) in trace.outputs.iter().enumerate() {
        for (r, &b) in trace.order[..trace.active[t]].iter().enumerate() {
            out[b].row_mut(t).assign(&y.row(r));
        }
    }
    out
}

/// Predictions ŷ(t) = W_o h(t) + b_o for every step of one cycle, starting
/// from zero hidden and cell states.
pub fn lstm_forward_cycle(model: &LstmModel, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let trace = forward_batch(model, &model.params, &[inputs], false)?;
    Ok(unpack_outputs(&trace, &[inputs.nrows()], model.n_outputs).pop().unwrap())
}

/// Batched inference over several independent cycles.
pub fn lstm_forward_many(model: &LstmModel, params: &[f64], inputs: &[ArrayView2<'_, f64>]) -> Result<Vec<Array2<f64>>> {
    let lens: Vec<usize> = inputs.iter().map(|x| x.nrows()).collect();
    let trace = forward_batch(model, params, inputs, false)?;
    Ok(unpack_outputs(&trace, &lens, model.n_outputs))
}

/// Mean squared error over all scored steps and outputs of the batch, with
/// its full backpropagation-through-time gradient written to `grad`.
pub fn lstm_loss_and_grad(model: &LstmModel, params: &[f64], batch: &SequenceBatch<'_>, grad: &mut [f64]) -> Result<f64> {
    let lay = model.layout();
    check_dim(lay.len(), params.len())?;
    check_dim(lay.len(), grad.len())?;
    let (m, dy) = (lay.m, lay.dy);
    let nb = batch.inputs.len();
    check_dim(nb, batch.targets.len())?;
    check_dim(nb, batch.loss_start.len())?;
    for (x, y) in batch.inputs.iter().zip(&batch.targets) {
        check_dim(x.nrows(), y.nrows())?;
        check_dim(dy, y.ncols())?;
    }
    let count: usize = (0..nb).map(|b| batch.inputs[b].nrows().saturating_sub(batch.loss_start[b]) * dy).sum();
    if count == 0 {
        return Err(Error::InvalidInput("batch has no scored steps".into()));
    }
    let scale = 2.0 / count as f64;
    let trace = forward_batch(model, params, &batch.inputs, true)?;
    let v = model.views(params);
    let wh = v.w.slice(s![.., ..m]);

    grad.fill(0.0);
    let (g_gates, g_out) = grad.split_at_mut(lay.out_w().start);
    let (g_w, g_b) = g_gates.split_at_mut(lay.gate_b().start);
    let mut g_w = ArrayViewMut2::from_shape((4 * m, m + lay.d), g_w).unwrap();
    let mut g_b = ArrayViewMut1::from(g_b);
    let (g_wo, g_bo) = g_out.split_at_mut(dy * m);
    let mut g_wo = ArrayViewMut2::from_shape((dy, m), g_wo).unwrap();
    let mut g_bo = ArrayViewMut1::from(g_bo);

    let t_max = trace.active.len();
    let mut loss = 0.0;
    let mut dh_next = Array2::<f64>::zeros((nb, m));
    let mut dc_next = Array2::<f64>::zeros((nb, m));
    let mut dz = Array2::<f64>::zeros((nb, 4 * m));
    for t in (0..t_max).rev() {
        let n = trace.active[t];
        let mut dy_t = Array2::<f64>::zeros((n, dy));
        for (r, &b) in trace.order[..n].iter().enumerate() {
            if t >= batch.loss_start[b] {
                for k in 0..dy {
                    let e = trace.outputs[t][[r, k]] - batch.targets[b][[t, k]];
                    loss += e * e;
                    dy_t[[r, k]] = scale * e;
                }
            }
        }
        let h_t = &trace.hiddens[t];
        general_mat_mul(1.0, &dy_t.t(), h_t, 1.0, &mut g_wo);
        g_bo += &dy_t.sum_axis(Axis(0));

        let mut dh = dh_next.slice(s![..n, ..]).to_owned();
        general_mat_mul(1.0, &dy_t, &v.wo, 1.0, &mut dh);

        let gates = &trace.gates[t];
        let tc = &trace.tanh_cells[t];
        let mut dz_t = dz.slice_mut(s![..n, ..]);
        for r in 0..n {
            for k in 0..m {
                let f = gates[[r, k]];
                let i = gates[[r, m + k]];
                let cand = gates[[r, 2 * m + k]];
                let o = gates[[r, 3 * m + k]];
                let c_prev = if t == 0 { 0.0 } else { trace.cells[t - 1][[r, k]] };
                let tv = tc[[r, k]];
                let dhv = dh[[r, k]];
                let dc = dc_next[[r, k]] + dhv * o * (1.0 - tv * tv);
                dz_t[[r, k]] = dc * c_prev * f * (1.0 - f);
                dz_t[[r, m + k]] = dc * cand * i * (1.0 - i);
                dz_t[[r, 2 * m + k]] = dc * i * (1.0 - cand * cand);
                dz_t[[r, 3 * m + k]] = dhv * tv * o * (1.0 - o);
                dc_next[[r, k]] = dc * f;
            }
        }
        let dz_t = dz.slice(s![..n, ..]);
        g_b += &dz_t.sum_axis(Axis(0));
        general_mat_mul(1.0, &dz_t.t(), &trace.xs[t], 1.0, &mut g_w.slice_mut(s![.., m..]));
        if t > 0 {
            let h_prev = &trace.hiddens[t - 1];
            general_mat_mul(1.0, &dz_t.t(), &h_prev.slice(s![..n, ..]), 1.0, &mut g_w.slice_mut(s![.., ..m]));
            let mut dh_prev = dh_next.slice_mut(s![..n, ..]);
            general_mat_mul(1.0, &dz_t, &wh, 0.0, &mut dh_prev);
        }
    }
    Ok(loss / count as f64)
}

fn loss_start_of(c: &crate::dataset::Cycle) -> usize {
    c.t0_offset.min(c.len())
}

/// Trains on whole cycles (batches of cycles, padded-free via length
/// sorting) with a seeded validation share of cycles for early stopping.
/// Each cycle's loss covers the steps from its evaluation start on.
pub fn lstm_train(model: &mut LstmModel, train: &CycleDataset, cfg: &SgdConfig) -> Result<TrainHistory> {
    model.validate()?;
    check_dim(model.n_inputs, train.n_inputs())?;
    check_dim(model.n_outputs, train.n_targets())?;
    let (tr, val) = split_validation_cycles(train.len(), cfg.validation_fraction, cfg.seed)?;
    let train_cycles: Vec<_> = tr.iter().map(|&i| &train.cycles[i]).collect();
    let val_cycles: Vec<_> = val.iter().map(|&i| &train.cycles[i]).collect();
    let meta = LstmModel { params: Vec::new(), ..model.clone() };
    let mut params = model.params.clone();
    let history = train_loop(
        &mut params,
        train_cycles.len(),
        cfg,
        |p, idx, g| {
            let batch = SequenceBatch {
                inputs: idx.iter().map(|&i| train_cycles[i].inputs.view()).collect(),
                targets: idx.iter().map(|&i| train_cycles[i].targets.view()).collect(),
                loss_start: idx.iter().map(|&i| loss_start_of(train_cycles[i])).collect(),
            };
            lstm_loss_and_grad(&meta, p, &batch, g)
        },
        |p| {
            let inputs: Vec<_> = val_cycles.iter().map(|c| c.inputs.view()).collect();
            let preds = lstm_forward_many(&meta, p, &inputs)?;
            let scored: Vec<_> =
                preds.iter().zip(&val_cycles).map(|(y, c)| y.slice(s![loss_start_of(c).., ..]).to_owned()).collect();
            let targets: Vec<_> = val_cycles.iter().map(|c| c.scored_targets()).collect();
            Ok(cycle_mse(&scored, &targets))
        },
    )?;
    model.params = params;
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| r.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn zero_parameters_zero_state() {
        let mut m = LstmModel::new(2, 3, 1, 0).unwrap();
        m.params.fill(0.0);
        let (h, c) = lstm_cell_step(&m, Array1::zeros(3).view(), Array1::zeros(3).view(), Array1::ones(2).view())
            .unwrap();
        assert!(h.iter().chain(c.iter()).all(|v| *v == 0.0));
        m.set_readout_bias(&[0.7]).unwrap();
        let y = lstm_forward_cycle(&m, random(5, 2, 1).view()).unwrap();
        assert!(y.iter().all(|v| *v == 0.7));
    }

    #[test]
    fn saturated_gates_carry_cell_state() {
        let mut m = LstmModel::new(2, 3, 1, 4).unwrap();
        m.gate_weights_mut().fill(0.0);
        let mut b = m.gate_biases_mut();
        b.slice_mut(s![..3]).fill(1e3);
        b.slice_mut(s![3..6]).fill(-1e3);
        let c0 = Array1::from(vec![0.3, -1.2, 2.5]);
        let mut h = Array1::zeros(3);
        let mut c = c0.clone();
        let xs = random(500, 2, 5);
        for x in xs.outer_iter() {
            let next = lstm_cell_step(&m, h.view(), c.view(), x).unwrap();
            h = next.0;
            c = next.1;
        }
        assert_eq!(c, c0);
    }

    #[test]
    fn cell_matches_scalar_equations() {
        let m = LstmModel::new(3, 4, 2, 9).unwrap();
        let h0 = Array1::from(vec![0.1, -0.2, 0.3, 0.05]);
        let c0 = Array1::from(vec![-0.4, 0.2, 0.0, 1.1]);
        let x = Array1::from(vec![0.5, -1.0, 0.25]);
        let (h, c) = lstm_cell_step(&m, h0.view(), c0.view(), x.view()).unwrap();
        let w = m.gate_weights();
        let b = m.gate_biases();
        let hx: Vec<f64> = h0.iter().chain(x.iter()).copied().collect();
        let pre = |row: usize| -> f64 { b[row] + (0..7).map(|j| w[[row, j]] * hx[j]).sum::<f64>() };
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        for k in 0..4 {
            let f = sig(pre(k));
            let i = sig(pre(4 + k));
            let cand = pre(8 + k).tanh();
            let o = sig(pre(12 + k));
            let c_ref = c0[k] * f + cand * i;
            assert!((c[k] - c_ref).abs() < 1e-15);
            assert!((h[k] - o * c_ref.tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_cycle_matches_repeated_cell_steps() {
        let m = LstmModel::new(2, 5, 2, 3).unwrap();
        let xs = random(12, 2, 7);
        let y = lstm_forward_cycle(&m, xs.view()).unwrap();
        let (mut h, mut c) = (Array1::zeros(5), Array1::zeros(5));
        for (t, x) in xs.outer_iter().enumerate() {
            let next = lstm_cell_step(&m, h.view(), c.view(), x).unwrap();
            h = next.0;
            c = next.1;
            let expect = m.readout_weights().dot(&h) + m.readout_bias();
            for k in 0..2 {
                assert!((y[[t, k]] - expect[k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn shifted_cycles_share_states() {
        let m = LstmModel::new(2, 4, 1, 11).unwrap();
        let xs = random(20, 2, 12);
        let full = lstm_forward_cycle(&m, xs.view()).unwrap();
        let tail = lstm_forward_cycle(&m, xs.slice(s![5.., ..])).unwrap();
        let again = lstm_forward_cycle(&m, xs.slice(s![5.., ..]).to_owned().view()).unwrap();
        assert_eq!(tail, again);
        assert_ne!(full.slice(s![5.., ..]), tail);
    }

    fn fd_worst(m: &LstmModel, batch: &SequenceBatch<'_>) -> f64 {
        let mut g = vec![0.0; m.params.len()];
        lstm_loss_and_grad(m, &m.params, batch, &mut g).unwrap();
        let mut p = m.params.clone();
        let mut scratch = vec![0.0; p.len()];
        let h = 1e-6;
        let mut worst = 0.0f64;
        for k in 0..p.len() {
            let orig = p[k];
            p[k] = orig + h;
            let up = lstm_loss_and_grad(m, &p, batch, &mut scratch).unwrap();
            p[k] = orig - h;
            let down = lstm_loss_and_grad(m, &p, batch, &mut scratch).unwrap();
            p[k] = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1e-6));
        }
        worst
    }

    #[test]
    fn bptt_matches_finite_differences() {
        let m = LstmModel::new(2, 3, 2, 21).unwrap();
        let xs = [random(10, 2, 1), random(7, 2, 2), random(10, 2, 3)];
        let ys = [random(10, 2, 4), random(7, 2, 5), random(10, 2, 6)];
        let batch = SequenceBatch {
            inputs: xs.iter().map(|x| x.view()).collect(),
            targets: ys.iter().map(|y| y.view()).collect(),
            loss_start: vec![0, 2, 3],
        };
        let worst = fd_worst(&m, &batch);
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn batched_gradient_equals_sum_of_single_sequences() {
        let m = LstmModel::new(2, 4, 1, 5).unwrap();
        let xs = [random(9, 2, 1), random(4, 2, 2), random(6, 2, 3)];
        let ys = [random(9, 1, 4), random(4, 1, 5), random(6, 1, 6)];
        let starts = [1usize, 0, 2];
        let batch = SequenceBatch {
            inputs: xs.iter().map(|x| x.view()).collect(),
            targets: ys.iter().map(|y| y.view()).collect(),
            loss_start: starts.to_vec(),
        };
        let mut g = vec![0.0; m.params.len()];
        let loss = lstm_loss_and_grad(&m, &m.params, &batch, &mut g).unwrap();
        let total: usize = (0..3).map(|b| xs[b].nrows() - starts[b]).sum();
        let mut sum = vec![0.0; g.len()];
        let mut loss_sum = 0.0;
        for b in 0..3 {
            let single = SequenceBatch { inputs: vec![xs[b].view()], targets: vec![ys[b].view()], loss_start: vec![starts[b]] };
            let mut gb = vec![0.0; g.len()];
            let lb = lstm_loss_and_grad(&m, &m.params, &single, &mut gb).unwrap();
            let n = (xs[b].nrows() - starts[b]) as f64;
            loss_sum += lb * n;
            for (s, v) in sum.iter_mut().zip(&gb) {
                *s += v * n;
            }
        }
        assert!((loss * total as f64 - loss_sum).abs() < 1e-12);
        for (a, b) in g.iter().zip(&sum) {
            assert!((a * total as f64 - b).abs() < 1e-12, "{a} {b}");
        }
    }
}
