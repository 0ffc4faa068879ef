//! Fitting and scoring through the shared data path: drop cycles too short
//! to score, standardize inputs with training statistics, build lag windows
//! for the stateless models, and score every model on the same hours.

use cyclecast::dataset::{fit_standardizer, window_stack, CycleDataset, Schema, Standardizer, WindowedView};
use cyclecast::esn::{esn_design_matrix, esn_predict, init_reservoir, readout_from_lrr, EsnModel};
use cyclecast::linear::{krr_fit, krr_predict, lrr_fit, lrr_predict, KrrConfig, KrrModel, LrrModel, NormalEquations};
use cyclecast::neural::{ffnn_forward, ffnn_train, lstm_forward_cycle, lstm_train, FfnnModel, LstmModel, Mode, TrainHistory};
use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};
use crate::metrics::{mse_metrics, MetricsReport};
use crate::models::{Hyperparams, ModelKind, ModelSpec, ReadoutLambda, READOUT_CV_FOLDS, READOUT_LAMBDA_GRID};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Lrr(LrrModel),
    Krr(KrrModel),
    Ffnn(FfnnModel),
    Esn(EsnModel),
    Lstm(LstmModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub seed: u64,
    pub schema: Schema,
    pub standardizer: Standardizer,
    pub fitted: Fitted,
    /// Epoch history of the neural models.
    pub history: Option<TrainHistory>,
}

/// Scored predictions of one cycle: rows cover hours `start..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePrediction {
    pub cycle_id: u64,
    pub start: usize,
    pub predictions: Array2<f64>,
}

/// Cycles long enough to have at least one scored hour.
pub fn scorable(data: &CycleDataset, eval_start: usize) -> CycleDataset {
    let kept = data.filter_min_len(eval_start + 1);
    let lost = data.len() - kept.len();
    if lost > 0 {
        log::warn!("{lost} cycle(s) shorter than {} h have no scored hours and are skipped", eval_start + 1);
    }
    kept.with_eval_start(eval_start)
}

/// Windowed rows of the scored hours only.
fn scored_windows(data: &CycleDataset, spec: &ModelSpec) -> Result<WindowedView> {
    let mut view = window_stack(data, spec.window)?;
    let skip = spec.eval_start - spec.window;
    for c in &mut view.cycles {
        c.features = c.features.slice(s![skip.., ..]).to_owned();
        c.targets = c.targets.slice(s![skip.., ..]).to_owned();
    }
    Ok(view)
}

fn target_mean(data: &CycleDataset) -> Vec<f64> {
    let mut sum = vec![0.0; data.n_targets()];
    let mut n = 0usize;
    for c in &data.cycles {
        for row in c.scored_targets().rows() {
            for (s, v) in sum.iter_mut().zip(row) {
                *s += v;
            }
            n += 1;
        }
    }
    sum.iter().map(|s| s / n.max(1) as f64).collect()
}

/// Fits `spec` on `train`. All randomness derives from `seed`.
pub fn fit(spec: &ModelSpec, train: &CycleDataset, seed: u64) -> Result<TrainedModel> {
    spec.validate()?;
    let kind = spec.kind();
    let raw = scorable(train, spec.eval_start);
    if raw.is_empty() {
        return Err(BenchError::Experiment(format!("no training cycle is longer than {} h", spec.eval_start)));
    }
    let standardizer = fit_standardizer(&raw)?;
    let data = standardizer.apply(&raw)?;
    let tag = |t: &str| derive_seed(seed, &format!("{kind}/{t}"));
    let mut history = None;
    let fitted = match &spec.hyperparams {
        Hyperparams::Lrr { lambda } => {
            let (x, y) = scored_windows(&data, spec)?.stacked();
            Fitted::Lrr(lrr_fit(x.view(), y.view(), *lambda, true)?)
        }
        Hyperparams::Krr { lambda, sigma, subsample_fraction } => {
            let (x, y) = scored_windows(&data, spec)?.stacked();
            let cfg = KrrConfig {
                lambda: *lambda,
                sigma: *sigma,
                subsample_fraction: *subsample_fraction,
                seed: tag("subsample"),
            };
            Fitted::Krr(krr_fit(x.view(), y.view(), &cfg)?)
        }
        Hyperparams::Ffnn { layers, layer_size, activation, dropout, sgd } => {
            let view = scored_windows(&data, spec)?;
            let mut sizes = vec![view.n_features()];
            sizes.extend(std::iter::repeat_n(*layer_size, *layers));
            sizes.push(data.n_targets());
            let mut model = FfnnModel::new(&sizes, *activation, *dropout, tag("init"))?;
            model.set_output_bias(&target_mean(&data))?;
            let cfg = cyclecast::neural::SgdConfig { seed: tag("sgd"), ..sgd.clone() };
            history = Some(ffnn_train(&mut model, &view, &cfg)?);
            Fitted::Ffnn(model)
        }
        Hyperparams::Esn { reservoir, readout_lambda } => {
            let res = init_reservoir(reservoir, data.n_inputs(), tag("reservoir"))?;
            let designs = data
                .cycles
                .iter()
                .map(|c| esn_design_matrix(&res, c))
                .collect::<cyclecast::Result<Vec<_>>>()?;
            let targets: Vec<_> = data.cycles.iter().map(|c| c.scored_targets()).collect();
            let lambda = match readout_lambda {
                ReadoutLambda::Fixed(l) => *l,
                ReadoutLambda::CrossValidated => cv_readout_lambda(&designs, &targets, tag("readout-cv"))?,
            };
            let ne = normal_equations(&designs, &targets, (0..designs.len()).collect::<Vec<_>>().as_slice())?;
            Fitted::Esn(readout_from_lrr(&res, &ne.solve(lambda)?)?)
        }
        Hyperparams::Lstm { hidden, sgd } => {
            let mut model = LstmModel::new(data.n_inputs(), *hidden, data.n_targets(), tag("init"))?;
            model.set_readout_bias(&target_mean(&data))?;
            let cfg = cyclecast::neural::SgdConfig { seed: tag("sgd"), ..sgd.clone() };
            history = Some(lstm_train(&mut model, &data, &cfg)?);
            Fitted::Lstm(model)
        }
    };
    Ok(TrainedModel { spec: spec.clone(), seed, schema: train.schema.clone(), standardizer, fitted, history })
}

fn normal_equations(designs: &[Array2<f64>], targets: &[ArrayView2<'_, f64>], which: &[usize]) -> Result<NormalEquations> {
    let width = designs[0].ncols();
    let mut ne = NormalEquations::new(width, targets[0].ncols(), true);
    for &i in which {
        ne.accumulate(designs[i].view(), targets[i])?;
    }
    Ok(ne)
}

/// Fold index of every item: a seeded shuffle dealt round-robin into `k` folds.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(BenchError::Experiment(format!("k-fold CV needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(BenchError::Experiment(format!("{n} cycles cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    Ok(fold)
}

/// Readout λ with the lowest cycle-weighted validation MSE (averaged over
/// targets) across k folds. Per-fold systems are totals minus the fold.
fn cv_readout_lambda(designs: &[Array2<f64>], targets: &[ArrayView2<'_, f64>], seed: u64) -> Result<f64> {
    let n = designs.len();
    let k = READOUT_CV_FOLDS.min(n);
    if k < 2 {
        log::warn!("too few cycles to cross-validate the readout; using lambda {}", READOUT_LAMBDA_GRID[0]);
        return Ok(READOUT_LAMBDA_GRID[0]);
    }
    let folds = fold_assignment(n, k, seed)?;
    let all: Vec<usize> = (0..n).collect();
    let total = normal_equations(designs, targets, &all)?;
    let mut scores = vec![0.0; READOUT_LAMBDA_GRID.len()];
    for f in 0..k {
        let members: Vec<usize> = all.iter().copied().filter(|&i| folds[i] == f).collect();
        let mut train = total.clone();
        train.sub(&normal_equations(designs, targets, &members)?);
        for (score, &lambda) in scores.iter_mut().zip(&READOUT_LAMBDA_GRID) {
            let w = train.solve(lambda)?;
            let mut fold_mse = 0.0;
            for &i in &members {
                let p = lrr_predict(&w, designs[i].view())?;
                let e = &p - &targets[i];
                fold_mse += e.mapv(|v| v * v).mean().unwrap_or(0.0);
            }
            *score += fold_mse / members.len() as f64 / k as f64;
        }
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    log::info!("ESN readout lambda {} selected (CV MSE {:.6})", READOUT_LAMBDA_GRID[best], scores[best]);
    Ok(READOUT_LAMBDA_GRID[best])
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    fn check_schema(&self, data: &CycleDataset) -> Result<()> {
        if data.schema.fingerprint() != self.schema.fingerprint() {
            return Err(BenchError::Experiment(format!(
                "data columns ({}) do not match the model's ({})",
                data.schema.fingerprint(),
                self.schema.fingerprint()
            )));
        }
        Ok(())
    }

    /// Predictions for the scored hours of every scorable cycle.
    pub fn predict(&self, data: &CycleDataset) -> Result<Vec<CyclePrediction>> {
        self.check_schema(data)?;
        let start = self.spec.eval_start;
        let data = self.standardizer.apply(&scorable(data, start))?;
        let per_cycle = |f: &dyn Fn(ArrayView2<'_, f64>) -> Result<Array2<f64>>| -> Result<Vec<CyclePrediction>> {
            data.cycles
                .iter()
                .map(|c| {
                    let predictions = f(c.inputs.view())?;
                    Ok(CyclePrediction { cycle_id: c.id, start, predictions })
                })
                .collect()
        };
        match &self.fitted {
            Fitted::Lrr(_) | Fitted::Krr(_) | Fitted::Ffnn(_) => {
                let view = scored_windows(&data, &self.spec)?;
                view.cycles
                    .iter()
                    .map(|c| {
                        let x = c.features.view();
                        let predictions = match &self.fitted {
                            Fitted::Lrr(m) => lrr_predict(m, x)?,
                            Fitted::Krr(m) => krr_predict(m, x)?,
                            Fitted::Ffnn(m) => {
                                ffnn_forward(m, x, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(0))?
                            }
                            _ => unreachable!(),
                        };
                        Ok(CyclePrediction { cycle_id: c.id, start, predictions })
                    })
                    .collect()
            }
            Fitted::Esn(m) => per_cycle(&|x| Ok(esn_predict(m, x)?.slice_move(s![start.., ..]))),
            Fitted::Lstm(m) => per_cycle(&|x| Ok(lstm_forward_cycle(m, x)?.slice_move(s![start.., ..]))),
        }
    }

    /// Metrics over the scored hours plus the underlying predictions.
    pub fn evaluate(&self, data: &CycleDataset) -> Result<(MetricsReport, Vec<CyclePrediction>)> {
        let preds = self.predict(data)?;
        let start = self.spec.eval_start;
        let kept = scorable(data, start);
        let targets: Vec<_> = kept.cycles.iter().map(|c| c.scored_targets()).collect();
        let p: Vec<_> = preds.iter().map(|c| c.predictions.view()).collect();
        let ids: Vec<u64> = preds.iter().map(|c| c.cycle_id).collect();
        let names: Vec<String> = data.schema.target_names().iter().map(|s| s.to_string()).collect();
        Ok((mse_metrics(&p, &targets, &ids, &names)?, preds))
    }
}

/// Stacks per-cycle predictions, mostly for tests.
pub fn stack_predictions(preds: &[CyclePrediction]) -> Array2<f64> {
    let views: Vec<_> = preds.iter().map(|p| p.predictions.view()).collect();
    ndarray::concatenate(Axis(0), &views).unwrap_or_else(|_| Array2::zeros((0, 0)))
}
