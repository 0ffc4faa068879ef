//! Cycle-level k-fold cross-validation and hyperparameter search.

use std::collections::BTreeMap;

use cyclecast::dataset::CycleDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};
use crate::models::{num, ModelKind, ModelSpec};
use crate::pipeline::{fit, fold_assignment};
use crate::seed::derive_seed;

/// Mean over folds of the fold's validation MSE, where each model is any
/// `fit_and_score(train, validation)` closure. Folds partition cycles.
pub fn kfold_cv_with<F>(dataset: &CycleDataset, k: usize, seed: u64, mut fit_and_score: F) -> Result<f64>
where
    F: FnMut(&CycleDataset, &CycleDataset) -> Result<f64>,
{
    let folds = fold_assignment(dataset.len(), k, seed)?;
    let mut total = 0.0;
    for f in 0..k {
        let (val, train): (Vec<_>, Vec<_>) = dataset.cycles.iter().zip(&folds).partition(|(_, &g)| g == f);
        let pick = |v: Vec<(&cyclecast::dataset::Cycle, &usize)>| v.into_iter().map(|(c, _)| c.id).collect::<Vec<_>>();
        total += fit_and_score(&dataset.select(&pick(train)), &dataset.select(&pick(val)))?;
    }
    Ok(total / k as f64)
}

/// Validation MSE (cycle-weighted, averaged over targets) of a model fit on
/// the other folds.
pub fn kfold_cv(dataset: &CycleDataset, k: usize, spec: &ModelSpec, seed: u64) -> Result<f64> {
    kfold_cv_with(dataset, k, derive_seed(seed, "cv/folds"), |train, val| {
        Ok(fit(spec, train, derive_seed(seed, "cv/model"))?.evaluate(val)?.0.mean().mse)
    })
}

/// Fits on a seeded share of cycles and scores on the held-out rest.
pub fn holdout_score(dataset: &CycleDataset, fraction: f64, spec: &ModelSpec, seed: u64) -> Result<f64> {
    let (train_idx, val_idx) =
        cyclecast::neural::split_validation_cycles(dataset.len(), fraction, derive_seed(seed, "holdout/split"))?;
    let ids = |idx: Vec<usize>| idx.into_iter().map(|i| dataset.cycles[i].id).collect::<Vec<_>>();
    let train = dataset.select(&ids(train_idx));
    let val = dataset.select(&ids(val_idx));
    Ok(fit(spec, &train, derive_seed(seed, "holdout/model"))?.evaluate(&val)?.0.mean().mse)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Explicit values in the given order (grid search; sampled uniformly
    /// in random search).
    Values(Vec<String>),
    Uniform { low: f64, high: f64 },
    LogUniform { low: f64, high: f64 },
    /// Inclusive integer range.
    IntRange { low: i64, high: i64 },
}

impl Distribution {
    /// Parses `uniform:a:b`, `loguniform:a:b`, `int:a:b`, or a comma list.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || BenchError::Config(format!("cannot parse search distribution '{text}'"));
        let parts: Vec<&str> = text.split(':').collect();
        let f = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let i = |s: &str| s.trim().parse::<i64>().map_err(|_| bad());
        let d = match parts.as_slice() {
            ["uniform", a, b] => Distribution::Uniform { low: f(a)?, high: f(b)? },
            ["loguniform", a, b] => Distribution::LogUniform { low: f(a)?, high: f(b)? },
            ["int", a, b] => Distribution::IntRange { low: i(a)?, high: i(b)? },
            _ => Distribution::Values(text.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()),
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Distribution::Values(v) => !v.is_empty(),
            Distribution::Uniform { low, high } => low <= high,
            Distribution::LogUniform { low, high } => *low > 0.0 && low <= high,
            Distribution::IntRange { low, high } => low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(BenchError::Config(format!("empty or inverted search distribution {self:?}")))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> String {
        match self {
            Distribution::Values(v) => v[rng.random_range(0..v.len())].clone(),
            Distribution::Uniform { low, high } => num(low + (high - low) * rng.random::<f64>()),
            Distribution::LogUniform { low, high } => num((low.ln() + (high.ln() - low.ln()) * rng.random::<f64>()).exp()),
            Distribution::IntRange { low, high } => rng.random_range(*low..=*high).to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    KFold { k: usize },
    Holdout { fraction: f64 },
}

impl Protocol {
    pub fn for_kind(kind: ModelKind) -> Self {
        if kind.tuned_by_validation() {
            Protocol::Holdout { fraction: 0.15 }
        } else {
            Protocol::KFold { k: 10 }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    /// Settings held fixed for every candidate, applied before the axes.
    pub base: ModelSpec,
    /// Axes in declaration order; the first axis varies slowest in a grid.
    pub axes: Vec<(String, Distribution)>,
    /// Candidate count for random search.
    pub budget: usize,
    pub protocol: Protocol,
}

fn log_grid(low_exp: i32, high_exp: i32) -> Distribution {
    Distribution::Values((low_exp..=high_exp).map(|e| num(10f64.powi(e))).collect())
}

fn values(v: &[&str]) -> Distribution {
    Distribution::Values(v.iter().map(|s| s.to_string()).collect())
}

impl SearchSpace {
    /// Default space of each model: decade grids for the ridge models, small
    /// grids around the published optima for the neural models and a random
    /// search space for the ESN.
    pub fn default_for(kind: ModelKind) -> Self {
        let base = ModelSpec::preset(kind, crate::models::Preset::Synthetic);
        let axes: Vec<(&str, Distribution)> = match kind {
            ModelKind::Lrr => vec![("lambda", log_grid(-3, 1))],
            ModelKind::Krr => vec![("lambda", log_grid(-16, 0)), ("sigma", log_grid(-1, 3))],
            ModelKind::Ffnn => vec![("learning_rate", values(&["1e-6", "5e-6", "1e-5"])), ("layer_size", values(&["256", "512"]))],
            ModelKind::Lstm => vec![("learning_rate", values(&["5e-4", "1e-3", "2e-3"])), ("hidden", values(&["256", "512"]))],
            ModelKind::Esn => vec![
                ("hidden", Distribution::IntRange { low: 50, high: 500 }),
                ("connectivity", Distribution::IntRange { low: 5, high: 50 }),
                ("spectral_radius", Distribution::Uniform { low: 0.5, high: 1.5 }),
                ("input_scale", Distribution::LogUniform { low: 1e-4, high: 1.0 }),
                ("bias_scale", Distribution::Uniform { low: 0.0, high: 1.0 }),
                ("leak_rate", Distribution::LogUniform { low: 0.005, high: 1.0 }),
                ("readout_lambda", Distribution::LogUniform { low: 1e-8, high: 1.0 }),
            ],
        };
        Self {
            base,
            axes: axes.into_iter().map(|(k, d)| (k.to_string(), d)).collect(),
            budget: 50,
            protocol: Protocol::for_kind(kind),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(BenchError::Config("search budget must be >= 1".into()));
        }
        let known = self.base.keys();
        for (key, d) in &self.axes {
            if !known.contains(key) {
                return Err(BenchError::Config(format!("'{key}' is not a setting of {}", self.base.kind())));
            }
            d.validate()?;
        }
        Ok(())
    }

    /// Cartesian product of the axes, which must all be explicit value lists.
    pub fn grid(&self) -> Result<Vec<BTreeMap<String, String>>> {
        let mut out = vec![BTreeMap::new()];
        for (key, d) in &self.axes {
            let Distribution::Values(vals) = d else {
                return Err(BenchError::Config(format!("grid search needs explicit values for '{key}'")));
            };
            out = out
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(key.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// `budget` seeded draws; axes are sampled in declaration order.
    pub fn sample(&self, seed: u64) -> Vec<BTreeMap<String, String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "search/sample"));
        (0..self.budget)
            .map(|_| self.axes.iter().map(|(k, d)| (k.clone(), d.sample(&mut rng))).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub settings: BTreeMap<String, String>,
    /// Validation MSE, or the failure message.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub candidates: Vec<Candidate>,
    /// Index into `candidates` of the lowest score; earlier candidates win ties.
    pub best: Option<usize>,
}

impl SearchResult {
    pub fn best_spec(&self, space: &SearchSpace) -> Result<ModelSpec> {
        let best = self.best.ok_or_else(|| BenchError::Experiment("every candidate failed".into()))?;
        let mut spec = space.base.clone();
        for (k, v) in &self.candidates[best].settings {
            spec.set(k, v)?;
        }
        Ok(spec)
    }

    pub fn best_score(&self) -> Option<f64> {
        self.best.and_then(|i| self.candidates[i].outcome.clone().ok())
    }
}

fn score(space: &SearchSpace, settings: &BTreeMap<String, String>, data: &CycleDataset, seed: u64) -> Result<f64> {
    let mut spec = space.base.clone();
    for (k, v) in settings {
        spec.set(k, v)?;
    }
    let s = match space.protocol {
        Protocol::KFold { k } => kfold_cv(data, k, &spec, seed)?,
        Protocol::Holdout { fraction } => holdout_score(data, fraction, &spec, seed)?,
    };
    if s.is_finite() {
        Ok(s)
    } else {
        Err(BenchError::Experiment(format!("non-finite validation score {s}")))
    }
}

/// Scores every candidate. Failures are recorded and excluded from the
/// choice of the best candidate.
pub fn evaluate_candidates(
    space: &SearchSpace,
    candidates: Vec<BTreeMap<String, String>>,
    data: &CycleDataset,
    seed: u64,
) -> Result<SearchResult> {
    space.validate()?;
    let mut out = Vec::with_capacity(candidates.len());
    let mut best: Option<usize> = None;
    for (index, settings) in candidates.into_iter().enumerate() {
        let outcome = score(space, &settings, data, seed).map_err(|e| e.to_string());
        match &outcome {
            Ok(s) => {
                log::info!("candidate {index}: {settings:?} -> {s:.6}");
                if best.is_none_or(|b| *s < out_score(&out, b)) {
                    best = Some(index);
                }
            }
            Err(e) => log::warn!("candidate {index} failed: {e}"),
        }
        out.push(Candidate { index, settings, outcome });
    }
    Ok(SearchResult { candidates: out, best })
}

fn out_score(cands: &[Candidate], i: usize) -> f64 {
    *cands[i].outcome.as_ref().expect("only successful candidates become best")
}

pub fn grid_search(space: &SearchSpace, data: &CycleDataset, seed: u64) -> Result<SearchResult> {
    evaluate_candidates(space, space.grid()?, data, seed)
}

pub fn random_search(space: &SearchSpace, data: &CycleDataset, seed: u64) -> Result<SearchResult> {
    evaluate_candidates(space, space.sample(seed), data, seed)
}
