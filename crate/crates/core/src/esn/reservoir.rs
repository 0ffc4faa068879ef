use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::spectral::{largest_singular_value, scale_to_spectral_radius, CsrMatrix};
use crate::dataset::{Cycle, CycleDataset};
use crate::error::{check_dim, Error, Result};
use crate::linear::{LrrModel, NormalEquations};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsnHyperparams {
    pub hidden: usize,
    /// Nonzeros per row of the recurrent matrix.
    pub connectivity: usize,
    pub spectral_radius: f64,
    /// Largest singular value of the input block of `W_in`.
    pub input_scale: f64,
    pub bias_scale: f64,
    pub leak_rate: f64,
}

impl EsnHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameters(m));
        if self.hidden == 0 {
            return bad("hidden size must be >= 1".into());
        }
        if self.connectivity == 0 || self.connectivity > self.hidden {
            return bad(format!("connectivity {} must be in 1..={}", self.connectivity, self.hidden));
        }
        if !(self.spectral_radius > 0.0) {
            return bad(format!("spectral radius must be > 0, got {}", self.spectral_radius));
        }
        if !(self.input_scale >= 0.0) || !(self.bias_scale >= 0.0) {
            return bad("input and bias scales must be >= 0".into());
        }
        if !(self.leak_rate > 0.0 && self.leak_rate <= 1.0) {
            return bad(format!("leak rate must be in (0, 1], got {}", self.leak_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    pub hyperparams: EsnHyperparams,
    pub n_inputs: usize,
    pub seed: u64,
    /// m × (1 + d); column 0 multiplies the constant 1.
    pub w_in: Array2<f64>,
    pub w_rec: CsrMatrix,
}

impl Reservoir {
    pub fn hidden(&self) -> usize {
        self.hyperparams.hidden
    }

    pub fn leak_rate(&self) -> f64 {
        self.hyperparams.leak_rate
    }
}

/// Builds the reservoir deterministically from `seed`: `connectivity`
/// standard-normal entries per recurrent row at random columns, rescaled to
/// the target spectral radius; a dense standard-normal input block rescaled
/// to the target largest singular value; a standard-normal bias column times
/// `bias_scale`.
pub fn init_reservoir(hp: &EsnHyperparams, n_inputs: usize, seed: u64) -> Result<Reservoir> {
    hp.validate()?;
    if n_inputs == 0 {
        return Err(Error::InvalidParameters("ESN needs at least one input".into()));
    }
    let m = hp.hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::with_capacity(m * hp.connectivity);
    let mut values = Vec::with_capacity(m * hp.connectivity);
    for _ in 0..m {
        let mut cols = sample(&mut rng, m, hp.connectivity).into_vec();
        cols.sort_unstable();
        for c in cols {
            col_idx.push(c);
            values.push(StandardNormal.sample(&mut rng));
        }
        row_ptr.push(col_idx.len());
    }
    let mut w_rec = CsrMatrix { n: m, row_ptr, col_idx, values };
    scale_to_spectral_radius(&mut w_rec, hp.spectral_radius, seed ^ 0x9e37_79b9_7f4a_7c15)?;

    let mut w_in = Array2::from_shape_fn((m, n_inputs + 1), |_| StandardNormal.sample(&mut rng));
    let sv = largest_singular_value(w_in.slice(s![.., 1..]))?;
    if sv > 0.0 {
        let f = hp.input_scale / sv;
        w_in.slice_mut(s![.., 1..]).mapv_inplace(|v| v * f);
    }
    w_in.column_mut(0).mapv_inplace(|v| v * hp.bias_scale);
    Ok(Reservoir { hyperparams: *hp, n_inputs, seed, w_in, w_rec })
}

/// h = (1−α)h_prev + α·tanh(W_in[1;x] + W_rec h_prev)
pub fn esn_update(res: &Reservoir, h_prev: ArrayView1<'_, f64>, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_dim(res.hidden(), h_prev.len())?;
    check_dim(res.n_inputs, x.len())?;
    let h = h_prev.to_vec();
    let mut out = vec![0.0; res.hidden()];
    update_into(res, &h, x, &mut out);
    Ok(Array1::from(out))
}

fn update_into(res: &Reservoir, h_prev: &[f64], x: ArrayView1<'_, f64>, out: &mut [f64]) {
    let a = res.leak_rate();
    for (i, o) in out.iter_mut().enumerate() {
        let row = res.w_in.row(i);
        let mut z = row[0];
        for (j, xv) in x.iter().enumerate() {
            z += row[j + 1] * xv;
        }
        *o = z;
    }
    res.w_rec.matvec_add(h_prev, out);
    for (o, hp) in out.iter_mut().zip(h_prev) {
        *o = (1.0 - a) * hp + a * o.tanh();
    }
}

/// States h(1..T) for one cycle from h(0) = 0; row t follows input row t.
pub fn esn_collect_states(res: &Reservoir, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    esn_collect_states_from(res, inputs, &vec![0.0; res.hidden()])
}

/// Same as [`esn_collect_states`] but from an arbitrary initial state.
pub fn esn_collect_states_from(res: &Reservoir, inputs: ArrayView2<'_, f64>, h0: &[f64]) -> Result<Array2<f64>> {
    check_dim(res.n_inputs, inputs.ncols())?;
    check_dim(res.hidden(), h0.len())?;
    let m = res.hidden();
    let mut states = Array2::zeros((inputs.nrows(), m));
    let mut h = h0.to_vec();
    let mut next = vec![0.0; m];
    for (t, x) in inputs.outer_iter().enumerate() {
        update_into(res, &h, x, &mut next);
        std::mem::swap(&mut h, &mut next);
        states.row_mut(t).assign(&ArrayView1::from(&h[..]));
    }
    Ok(states)
}

/// Rows `[x(t); h(t)]` for the scored steps of a cycle (the constant 1 is
/// added by the readout).
pub fn esn_design_matrix(res: &Reservoir, cycle: &Cycle) -> Result<Array2<f64>> {
    let states = esn_collect_states(res, cycle.inputs.view())?;
    let start = cycle.t0_offset.min(cycle.len());
    let d = res.n_inputs;
    let mut x = Array2::zeros((cycle.len() - start, d + res.hidden()));
    x.slice_mut(s![.., ..d]).assign(&cycle.inputs.slice(s![start.., ..]));
    x.slice_mut(s![.., d..]).assign(&states.slice(s![start.., ..]));
    Ok(x)
}

/// Readout normal equations contributed by one cycle.
pub fn esn_normal_equations(res: &Reservoir, cycle: &Cycle) -> Result<NormalEquations> {
    let x = esn_design_matrix(res, cycle)?;
    NormalEquations::from_data(x.view(), cycle.scored_targets(), true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsnModel {
    pub reservoir: Reservoir,
    /// d_y × (1 + d + m), acting on `[1; x; h]`.
    pub w_out: Array2<f64>,
    pub readout_lambda: f64,
}

/// Moves an LRR fit on `[x; h]` (intercept last) into the `[1; x; h]`
/// column order. The intercept is not penalized.
pub fn readout_from_lrr(res: &Reservoir, lrr: &LrrModel) -> Result<EsnModel> {
    let width = res.n_inputs + res.hidden();
    check_dim(width, lrr.n_inputs())?;
    let mut w_out = Array2::zeros((lrr.n_outputs(), width + 1));
    w_out.column_mut(0).assign(&lrr.intercept());
    w_out.slice_mut(s![.., 1..]).assign(&lrr.coefficients());
    Ok(EsnModel { reservoir: res.clone(), w_out, readout_lambda: lrr.lambda })
}

/// Ridge readout over the scored steps of all training cycles.
pub fn esn_fit_readout(res: &Reservoir, train: &CycleDataset, readout_lambda: f64) -> Result<EsnModel> {
    if train.is_empty() {
        return Err(Error::InvalidInput("no training cycles".into()));
    }
    check_dim(res.n_inputs, train.n_inputs())?;
    let mut ne = NormalEquations::new(res.n_inputs + res.hidden(), train.n_targets(), true);
    for c in &train.cycles {
        ne.add(&esn_normal_equations(res, c)?);
    }
    readout_from_lrr(res, &ne.solve(readout_lambda)?)
}

/// Per-step predictions `W_out [1; x(t); h(t)]` for one cycle.
pub fn esn_predict(model: &EsnModel, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let res = &model.reservoir;
    let states = esn_collect_states(res, inputs)?;
    let d = res.n_inputs;
    let mut y = inputs.dot(&model.w_out.slice(s![.., 1..=d]).t());
    y += &states.dot(&model.w_out.slice(s![.., d + 1..]).t());
    y += &model.w_out.column(0).insert_axis(Axis(0));
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, Schema};
    use rand::Rng;

    fn hp(m: usize, k: usize, rho: f64) -> EsnHyperparams {
        EsnHyperparams {
            hidden: m,
            connectivity: k,
            spectral_radius: rho,
            input_scale: 0.5,
            bias_scale: 0.3,
            leak_rate: 0.4,
        }
    }

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| r.random::<f64>() * 2.0 - 1.0)
    }

    fn dense_radius(a: &Array2<f64>) -> f64 {
        let n = a.nrows();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
        m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn synthetic_preset_reservoir_hits_targets() {
        let h = EsnHyperparams {
            hidden: 343,
            connectivity: 32,
            spectral_radius: 1.18,
            input_scale: 0.004,
            bias_scale: 0.68,
            leak_rate: 0.05,
        };
        let r = init_reservoir(&h, 6, 11).unwrap();
        assert!((0..343).all(|i| r.w_rec.row_nnz(i) == 32));
        let rho = dense_radius(&r.w_rec.to_dense());
        assert!((rho - 1.18).abs() < 1e-6, "{rho}");
        let sv = largest_singular_value(r.w_in.slice(s![.., 1..])).unwrap();
        assert!((sv - 0.004).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_reservoir() {
        let a = init_reservoir(&hp(30, 4, 0.9), 2, 3).unwrap();
        let b = init_reservoir(&hp(30, 4, 0.9), 2, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_reservoir(&hp(30, 4, 0.9), 2, 4).unwrap());
    }

    #[test]
    fn rejects_connectivity_above_size() {
        assert!(init_reservoir(&hp(58, 90, 0.77), 3, 0).is_err());
    }

    #[test]
    fn update_edge_cases() {
        let mut r = init_reservoir(&hp(5, 2, 0.8), 2, 1).unwrap();
        let h0 = Array1::from(vec![0.5, -0.2, 0.1, 0.9, -1.0]);
        let x = Array1::from(vec![0.3, -0.7]);
        // α = 1: pure tanh.
        r.hyperparams.leak_rate = 1.0;
        let h = esn_update(&r, h0.view(), x.view()).unwrap();
        let mut pre = r.w_in.column(0).to_owned() + r.w_in.slice(s![.., 1..]).dot(&x);
        pre += &r.w_rec.matvec(h0.view());
        assert_eq!(h, pre.mapv(f64::tanh));
        // Zero weights: only the leak remains.
        r.hyperparams.leak_rate = 0.25;
        r.w_in.fill(0.0);
        r.w_rec.scale(0.0);
        let h = esn_update(&r, h0.view(), x.view()).unwrap();
        assert_eq!(h, h0.mapv(|v| 0.75 * v));
    }

    #[test]
    fn update_matches_scalar_loop_and_is_bounded() {
        let r = init_reservoir(&hp(8, 3, 1.3), 3, 2).unwrap();
        let dense = r.w_rec.to_dense();
        let h0 = Array1::from_iter((0..8).map(|i| (i as f64 * 0.37).sin()));
        let x = Array1::from(vec![1.0, -2.0, 0.5]);
        let h = esn_update(&r, h0.view(), x.view()).unwrap();
        for i in 0..8 {
            let mut z = r.w_in[[i, 0]];
            for j in 0..3 {
                z += r.w_in[[i, j + 1]] * x[j];
            }
            for j in 0..8 {
                z += dense[[i, j]] * h0[j];
            }
            let expect = 0.6 * h0[i] + 0.4 * z.tanh();
            assert!((h[i] - expect).abs() < 1e-15);
        }
        let bound = h0.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        assert!(h.iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn states_reset_per_cycle() {
        let r = init_reservoir(&hp(6, 2, 0.9), 2, 8).unwrap();
        let a = random(4, 2, 1);
        let first = esn_collect_states(&r, a.slice(s![..1, ..])).unwrap();
        let single = r.w_in.column(0).to_owned() + r.w_in.slice(s![.., 1..]).dot(&a.row(0));
        for i in 0..6 {
            assert!((first[[0, i]] - 0.4 * single[i].tanh()).abs() < 1e-15);
        }
        let b = random(3, 2, 2);
        let joined = ndarray::concatenate(Axis(0), &[a.view(), b.view()]).unwrap();
        let long = esn_collect_states(&r, joined.view()).unwrap();
        let fresh = esn_collect_states(&r, b.view()).unwrap();
        assert_ne!(long.slice(s![4.., ..]), fresh);
    }

    #[test]
    fn fading_memory_at_subunit_radius() {
        let h = EsnHyperparams { spectral_radius: 0.77, leak_rate: 0.3, ..hp(58, 10, 0.77) };
        let r = init_reservoir(&h, 3, 6).unwrap();
        let xs = random(200, 3, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut h0: Vec<f64> = (0..58).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = h0.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        h0.iter_mut().for_each(|v| *v /= n);
        let a = esn_collect_states(&r, xs.view()).unwrap();
        let b = esn_collect_states_from(&r, xs.view(), &h0).unwrap();
        let gap = (&a.row(100) - &b.row(100)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(gap < 1e-6, "{gap}");
    }

    fn dataset(n_cycles: usize, f: impl Fn(&Array2<f64>) -> Array2<f64>) -> CycleDataset {
        let schema = Schema {
            inputs: vec![Column::new("a", ""), Column::new("b", "")],
            targets: vec![Column::new("y", "")],
            time_column: None,
            charge_column: None,
        };
        let cycles = (0..n_cycles)
            .map(|i| {
                let x = random(50, 2, i as u64);
                let y = f(&x);
                Cycle::new(i as u64 + 1, x, y).unwrap()
            })
            .collect();
        CycleDataset::new(schema, cycles).unwrap()
    }

    #[test]
    fn zero_targets_give_zero_readout() {
        let ds = dataset(3, |x| Array2::zeros((x.nrows(), 1)));
        let r = init_reservoir(&hp(10, 3, 0.9), 2, 1).unwrap();
        let m = esn_fit_readout(&r, &ds, 1e-3).unwrap();
        assert!(m.w_out.iter().all(|v| v.abs() < 1e-14));
        assert!(esn_predict(&m, ds.cycles[0].inputs.view()).unwrap().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn recovers_linear_task() {
        let ds = dataset(5, |x| x.map_axis(Axis(1), |r| 2.0 * r[0] - r[1] + 0.5).insert_axis(Axis(1)));
        let r = init_reservoir(&hp(20, 4, 0.9), 2, 2).unwrap();
        let m = esn_fit_readout(&r, &ds, 1e-8).unwrap();
        let c = &ds.cycles[0];
        let p = esn_predict(&m, c.inputs.view()).unwrap();
        let y = c.targets.column(0);
        let mean = y.mean().unwrap();
        let ss_res: f64 = p.column(0).iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
        let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
        assert!(1.0 - ss_res / ss_tot > 0.999);
    }

    #[test]
    fn prediction_is_linear_readout_of_design_rows() {
        let ds = dataset(2, |x| x.column(0).to_owned().insert_axis(Axis(1)));
        let r = init_reservoir(&hp(7, 2, 1.1), 2, 3).unwrap();
        let m = esn_fit_readout(&r, &ds, 0.1).unwrap();
        let c = &ds.cycles[1];
        let design = esn_design_matrix(&r, c).unwrap();
        let lrr = LrrModel {
            weights: ndarray::concatenate(Axis(1), &[m.w_out.slice(s![.., 1..]), m.w_out.slice(s![.., ..1])])
                .unwrap(),
            lambda: 0.1,
        };
        let via_lrr = crate::linear::lrr_predict(&lrr, design.view()).unwrap();
        let direct = esn_predict(&m, c.inputs.view()).unwrap();
        for (a, b) in via_lrr.iter().zip(direct.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
