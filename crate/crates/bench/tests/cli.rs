use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn cyclecast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclecast")).args(args).current_dir(dir).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = cyclecast(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

const GENERATOR: &str = "seed = 5\nmax_cycles = 20\n";

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

/// Runs every subcommand in `dir` on small inputs.
fn run_all(dir: &Path) {
    write(dir, "gen.toml", GENERATOR);
    ok(dir, &["generate", "--config", "gen.toml", "--out", "data.csv"]);
    write(dir, "lrr.toml", "lambda = 0.1\n");
    ok(dir, &[
        "train", "--model", "lrr", "--data", "data.csv", "--hyperparams", "lrr.toml", "--split", "random:0.2:1",
        "--seed", "3", "--out", "lrr.json",
    ]);
    ok(dir, &["evaluate", "--model", "lrr.json", "--data", "data.csv", "--out", "report.csv"]);
    ok(dir, &[
        "train", "--model", "esn", "--data", "data.csv", "--split", "random:0.2:1", "--set", "hidden=30",
        "--set", "connectivity=4", "--set", "readout_lambda=1e-4", "--out", "esn.json",
    ]);
    ok(dir, &["evaluate", "--model", "esn.json", "--data", "data.csv", "--out", "esn_report.csv"]);
    write(dir, "space.toml", "mode = \"grid\"\nfolds = 3\n[space]\nlambda = \"0.01, 1, 100\"\n");
    ok(dir, &["search", "--model", "lrr", "--space", "space.toml", "--data", "data.csv", "--out", "cv.csv"]);
    write(dir, "esn_space.toml", "mode = \"random\"\nbudget = 3\nfolds = 3\nfixed.hidden = 20\nfixed.connectivity = 3\n");
    ok(dir, &[
        "search", "--model", "esn", "--space", "esn_space.toml", "--data", "data.csv", "--seed", "2", "--out",
        "esn_cv.csv",
    ]);
    write(
        dir,
        "curve.toml",
        "models = [\"lrr\", \"krr\"]\nfractions = [0.25, 1.0]\nsplit = \"random:0.2:0\"\nseed = 1\n\
         [generate]\nseed = 5\nmax_cycles = 20\n",
    );
    ok(dir, &["learning-curve", "--config", "curve.toml", "--out", "curve.csv"]);
}

#[test]
fn every_command_reruns_byte_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_all(a.path());
    let first = snapshot(a.path());
    run_all(b.path());
    assert_eq!(snapshot(b.path()), first, "second directory differs");
    run_all(a.path());
    assert_eq!(snapshot(a.path()), first, "rerun in place differs");
    for f in ["data.csv", "lrr.json", "report.csv", "cv.csv", "cv.best.toml", "esn_cv.csv", "curve.csv"] {
        assert!(first.contains_key(f), "missing {f}");
    }
    for f in ["data.csv", "lrr.json", "report.csv", "cv.csv", "esn_cv.csv", "curve.csv"] {
        assert!(first.contains_key(&format!("{f}.manifest.json")), "no manifest for {f}");
    }
}

#[test]
fn generate_train_evaluate_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let start = Instant::now();
    write(d, "gen.toml", GENERATOR);
    ok(d, &["generate", "--config", "gen.toml", "--out", "data.csv"]);
    ok(d, &["train", "--model", "lrr", "--data", "data.csv", "--split", "random:0.2:1", "--out", "m.json"]);
    ok(d, &["evaluate", "--model", "m.json", "--data", "data.csv", "--out", "report.csv"]);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "{elapsed:?}");

    let mut r = csv::Reader::from_path(d.join("report.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["model", "target", "split", "mse", "nmse", "mae", "r2"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    // two targets plus the mean row, for the train and test parts
    assert_eq!(rows.len(), 6);
    let targets: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    assert_eq!(targets, vec!["C_pct", "S_pct", "mean", "C_pct", "S_pct", "mean"]);
    for row in &rows {
        let nmse: f64 = row[4].parse().unwrap();
        let r2: f64 = row[6].parse().unwrap();
        assert_eq!(r2, 1.0 - nmse);
    }
    let traces: Vec<_> = std::fs::read_dir(d.join("report_traces")).unwrap().collect();
    assert_eq!(traces.len(), 20);
    let trace = std::fs::read_dir(d.join("report_traces")).unwrap().next().unwrap().unwrap().path();
    let head = std::fs::read_to_string(trace).unwrap();
    assert!(head.starts_with("cycle_id,t,C_pct,C_pct_pred,S_pct,S_pct_pred\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("data.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["outputs"][0]["path"], "data.csv");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn failures_print_one_json_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = cyclecast(d, &["train", "--model", "lrr", "--data", "missing.csv", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["status"], "error");
    assert_eq!(v["command"], "train");
    assert!(v["kind"].is_string() && v["message"].is_string());

    write(d, "bad.toml", "seed = 1\nmax_cyles = 3\n");
    let out = cyclecast(d, &["generate", "--config", "bad.toml", "--out", "x.csv"]);
    let v: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().lines().last().unwrap()).unwrap();
    assert_eq!((v["command"].as_str(), v["kind"].as_str()), (Some("generate"), Some("config")));
    assert!(v["message"].as_str().unwrap().contains("max_cyles"));
    assert!(!d.join("x.csv").exists());
}

#[test]
fn saved_models_reload_to_identical_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "gen.toml", GENERATOR);
    ok(d, &["generate", "--config", "gen.toml", "--out", "data.csv"]);
    let data = cyclecast_bench::cli::load_data(&d.join("data.csv"), cyclecast_bench::cli::SchemaKind::Synthetic).unwrap();
    for (model, extra) in [
        ("lrr", vec![]),
        ("krr", vec!["--set", "subsample_fraction=0.2"]),
        ("ffnn", vec!["--set", "layer_size=8", "--set", "max_epochs=2"]),
        ("esn", vec!["--set", "hidden=25", "--set", "connectivity=3", "--set", "readout_lambda=0.01"]),
        ("lstm", vec!["--set", "hidden=4", "--set", "max_epochs=2"]),
    ] {
        let out = format!("{model}.json");
        let mut args = vec!["train", "--model", model, "--data", "data.csv", "--seed", "8", "--out", &out];
        args.extend(extra);
        ok(d, &args);
        let (loaded, split) = cyclecast_bench::artifact::load(d.join(&out)).unwrap();
        assert_eq!(split.as_deref(), Some("all"));
        let text = std::fs::read_to_string(d.join(&out)).unwrap();
        assert_eq!(cyclecast_bench::artifact::to_json(&loaded, split.as_deref()).unwrap(), text, "{model}");
        let preds = loaded.predict(&data).unwrap();
        assert_eq!(preds.len(), data.len());
        assert!(preds.iter().all(|p| p.predictions.iter().all(|v| v.is_finite())));
    }
}
