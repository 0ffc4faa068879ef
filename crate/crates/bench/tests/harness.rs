mod common;

use std::collections::BTreeMap;

use cyclecast_bench::curve::{learning_curve, nested_subsets};
use cyclecast_bench::models::{ModelKind, ModelSpec, Preset};
use cyclecast_bench::pipeline::fit;
use cyclecast_bench::search::{
    grid_search, kfold_cv, kfold_cv_with, random_search, Distribution, Protocol, SearchSpace,
};

fn lrr_space(values: &[&str]) -> SearchSpace {
    SearchSpace {
        base: ModelSpec::preset(ModelKind::Lrr, Preset::Synthetic),
        axes: vec![("lambda".into(), Distribution::Values(values.iter().map(|v| v.to_string()).collect()))],
        budget: 50,
        protocol: Protocol::KFold { k: 4 },
    }
}

#[test]
fn folds_partition_the_cycles() {
    let ds = common::synthetic(10, 3);
    let mut seen = Vec::new();
    kfold_cv_with(&ds, 4, 9, |train, val| {
        assert!(train.ids().iter().all(|id| !val.ids().contains(id)));
        assert_eq!(train.len() + val.len(), ds.len());
        seen.extend(val.ids());
        Ok(0.0)
    })
    .unwrap();
    seen.sort_unstable();
    assert_eq!(seen, ds.ids());
}

#[test]
fn grid_search_picks_the_lowest_independent_score() {
    let ds = common::synthetic(10, 3);
    let space = lrr_space(&["1e-3", "1", "1000", "1e6"]);
    let result = grid_search(&space, &ds, 5).unwrap();
    assert_eq!(result.candidates.len(), 4);
    let scores: Vec<f64> = ["1e-3", "1", "1000", "1e6"]
        .iter()
        .map(|l| {
            let mut spec = space.base.clone();
            spec.set("lambda", l).unwrap();
            kfold_cv(&ds, 4, &spec, 5).unwrap()
        })
        .collect();
    for (c, s) in result.candidates.iter().zip(&scores) {
        assert_eq!(c.outcome.as_ref().unwrap(), s);
    }
    let argmin = (0..4).min_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
    assert_eq!(result.best, Some(argmin));
    // Heavy shrinkage toward the intercept cannot beat a moderate ridge here.
    assert!(scores[3] > scores[argmin]);
    assert_eq!(result.best_spec(&space).unwrap().pairs()["lambda"], space.grid().unwrap()[argmin]["lambda"]);
}

#[test]
fn single_point_grid_and_ties() {
    let ds = common::synthetic(8, 4);
    let one = grid_search(&lrr_space(&["0.01"]), &ds, 1).unwrap();
    assert_eq!((one.candidates.len(), one.best), (1, Some(0)));
    let tied = grid_search(&lrr_space(&["0.01", "0.01"]), &ds, 1).unwrap();
    assert_eq!(tied.best, Some(0), "first candidate wins a tie");
}

#[test]
fn failing_candidates_are_recorded_and_skipped() {
    let ds = common::synthetic(8, 4);
    // A window beyond the evaluation start is rejected by validation.
    let mut space = lrr_space(&["0.01"]);
    space.axes.insert(0, ("window".into(), Distribution::Values(vec!["48".into(), "12".into()])));
    let r = grid_search(&space, &ds, 2).unwrap();
    assert!(r.candidates[0].outcome.is_err());
    assert!(r.candidates[1].outcome.is_ok());
    assert_eq!(r.best, Some(1));
}

#[test]
fn random_search_is_seeded_and_best_beats_the_median() {
    let ds = common::synthetic(10, 6);
    let mut space = SearchSpace::default_for(ModelKind::Esn);
    space.axes.retain(|(k, _)| k != "hidden" && k != "connectivity");
    space.base.set("hidden", "40").unwrap();
    space.base.set("connectivity", "5").unwrap();
    space.protocol = Protocol::KFold { k: 3 };
    space.budget = 50;
    let a = random_search(&space, &ds, 11).unwrap();
    let b = random_search(&space, &ds, 11).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.candidates.len(), 50);
    assert_ne!(space.sample(11), space.sample(12));
    let mut ok: Vec<f64> = a.candidates.iter().filter_map(|c| c.outcome.clone().ok()).collect();
    ok.sort_by(f64::total_cmp);
    assert!(a.best_score().unwrap() <= ok[ok.len() / 2]);

    space.budget = 1;
    assert_eq!(random_search(&space, &ds, 11).unwrap().candidates.len(), 1);
}

#[test]
fn subsets_are_nested_prefixes() {
    let ds = common::synthetic(20, 8);
    let fr = [0.05, 0.1, 0.25, 0.5, 1.0];
    let subsets = nested_subsets(&ds, &fr, 3).unwrap();
    let sizes: Vec<usize> = subsets.iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![1, 2, 5, 10, 20]);
    for w in subsets.windows(2) {
        assert_eq!(&w[1][..w[0].len()], &w[0][..]);
    }
    assert_eq!(subsets, nested_subsets(&ds, &fr, 3).unwrap());
    assert!(nested_subsets(&ds, &[0.0], 3).is_err());
    assert!(nested_subsets(&ds, &[1.5], 3).is_err());
    assert!(nested_subsets(&ds, &[0.01], 3).is_err(), "selects no cycle");
}

#[test]
fn learning_curve_keeps_the_test_set_and_full_fraction_matches_a_plain_fit() {
    let all = common::synthetic(24, 9);
    let ids = all.ids();
    let train = all.select(&ids[..20]);
    let test = all.select(&ids[20..]);
    let spec = ModelSpec::preset(ModelKind::Lrr, Preset::Synthetic);
    let points = learning_curve(&train, &test, &[0.05, 0.5, 1.0], &[spec.clone()], 4).unwrap();
    assert_eq!(points.len(), 3);
    let test_ids: Vec<BTreeMap<u64, usize>> =
        points.iter().map(|p| p.test.cycles.iter().map(|c| (c.cycle_id, c.rows)).collect()).collect();
    assert!(test_ids.windows(2).all(|w| w[0] == w[1]));

    let plain = fit(&spec, &train, 4).unwrap().evaluate(&test).unwrap().0;
    assert_eq!(points[2].test, plain);
    let (small, full) = (points[0].test.mean().nmse, points[2].test.mean().nmse);
    assert!(small.is_finite() && full.is_finite());
}

/// Gaussian weights with prior variance τ² and noise σ² make λ = σ²/τ² the
/// expected-risk minimizer of ridge regression.
#[test]
fn grid_recovers_the_data_generating_ridge() {
    use cyclecast::dataset::{Column, Cycle, CycleDataset, Schema};
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_distr::{Distribution as _, Normal};

    let (d, tau, sigma) = (40, 0.2, 1.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let w: Vec<f64> = (0..d).map(|_| tau * n01.sample(&mut rng)).collect();
    let schema = Schema {
        inputs: (0..d).map(|j| Column::new(&format!("x{j}"), "")).collect(),
        targets: vec![Column::new("y", "")],
        time_column: None,
        charge_column: None,
    };
    let cycles = (0..20)
        .map(|i| {
            let x = Array2::from_shape_fn((15, d), |_| n01.sample(&mut rng));
            let y = Array2::from_shape_fn((15, 1), |(t, _)| {
                (0..d).map(|j| x[[t, j]] * w[j]).sum::<f64>() + sigma * n01.sample(&mut rng)
            });
            Cycle::new(i + 1, x, y).unwrap()
        })
        .collect();
    let ds = CycleDataset::new(schema, cycles).unwrap();
    let mut space = lrr_space(&["0.25", "25", "2500"]);
    space.base.set("window", "0").unwrap();
    space.base.set("eval_start", "0").unwrap();
    space.protocol = Protocol::KFold { k: 10 };
    let r = grid_search(&space, &ds, 1).unwrap();
    assert_eq!(r.best, Some(1), "{:?}", r.candidates);
}

#[test]
fn linear_ridge_saturates_early_on_the_learning_curve() {
    let all = common::synthetic(220, 2024);
    let ids = all.ids();
    let train = all.select(&ids[..200]);
    let test = all.select(&ids[200..]);
    let spec = ModelSpec::preset(ModelKind::Lrr, Preset::Synthetic);
    let p = learning_curve(&train, &test, &[0.05, 1.0], &[spec], 0).unwrap();
    let (small, full) = (p[0].test.mean().nmse, p[1].test.mean().nmse);
    assert!((small - full).abs() <= 0.2 * full, "NMSE {small} at 5% vs {full} at 100%");
}
