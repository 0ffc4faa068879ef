//! Command-line subcommands. Every command writes its artifacts plus a
//! `<artifact>.manifest.json`, and nothing else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyclecast::dataset::{
    engineer_features_realworld, raw_plant_schema, read_csv, split_by_cycles, write_csv, CycleDataset,
};
use cyclecast::reactor::{generate_dataset, synthetic_schema};

use crate::artifact;
use crate::config::{generator_config, parse_split, FlatConfig};
use crate::curve::learning_curve;
use crate::error::{BenchError, Result};
use crate::models::{ModelKind, ModelSpec, Preset};
use crate::output::{self, Manifest};
use crate::search::{grid_search, random_search, Distribution, Protocol, SearchSpace};

#[derive(Debug, Parser)]
#[command(name = "cyclecast", version, about = "Degradation-cycle forecasting benchmark")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the reactor and write the synthetic dataset.
    Generate(GenerateArgs),
    /// Fit a model and save it.
    Train(TrainArgs),
    /// Score a saved model and write metrics and prediction traces.
    Evaluate(EvaluateArgs),
    /// Grid or random hyperparameter search.
    Search(SearchArgs),
    /// Train on nested subsets and score on a fixed test set.
    LearningCurve(CurveArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Search(_) => "search",
            Command::LearningCurve(_) => "learning-curve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemaKind {
    /// Reactor simulator output.
    Synthetic,
    /// Raw plant log, run through the plant feature pipeline.
    Plant,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Override a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator config (flat TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "synthetic")]
    pub schema: SchemaKind,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: ModelKind,
    #[command(flatten)]
    pub data: DataArgs,
    /// Hyperparameter file (flat TOML of model settings).
    #[arg(long)]
    pub hyperparams: Option<PathBuf>,
    /// Starting values before the file and overrides.
    #[arg(long, default_value = "synthetic")]
    pub preset: String,
    /// Which cycles to train on: the training part of this split.
    #[arg(long, default_value = "all")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Saved model.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Defaults to the split the model was trained with.
    #[arg(long)]
    pub split: Option<String>,
    /// Metrics report CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-cycle traces; defaults to `<out stem>_traces`.
    #[arg(long)]
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub model: ModelKind,
    /// Search space file; defaults to the model's built-in space.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Search runs on the training part of this split.
    #[arg(long, default_value = "all")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CV table CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<FlatConfig> {
    let mut cfg = match path {
        Some(p) => FlatConfig::load(p)?,
        None => FlatConfig::default(),
    };
    cfg.apply_overrides(overrides)?;
    Ok(cfg)
}

pub fn load_data(path: &Path, schema: SchemaKind) -> Result<CycleDataset> {
    Ok(match schema {
        SchemaKind::Synthetic => read_csv(path, &synthetic_schema())?,
        SchemaKind::Plant => engineer_features_realworld(&read_csv(path, &raw_plant_schema())?)?,
    })
}

/// `(train, test)` per split text; `all` gives everything as training data
/// and an empty test part.
fn split_data(data: &CycleDataset, split: &str) -> Result<(CycleDataset, Option<CycleDataset>)> {
    match parse_split(split)? {
        None => Ok((data.clone(), None)),
        Some(spec) => {
            let (train, test) = split_by_cycles(data, &spec)?;
            Ok((train, Some(test)))
        }
    }
}

fn model_spec(kind: ModelKind, preset: &str, file: Option<&Path>, overrides: &[String]) -> Result<ModelSpec> {
    let mut spec = ModelSpec::preset(kind, preset.parse::<Preset>()?);
    let cfg = load_config(file, overrides)?;
    for (k, v) in cfg.values() {
        spec.set(k, v)?;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Search(a) => search(a),
        Command::LearningCurve(a) => curve(a),
    }
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref(), &a.overrides.set)?;
    let g = generator_config(&cfg, "")?;
    cfg.finish()?;
    let sim = generate_dataset(&g)?;
    log::info!("{} cycles, {} h, mean cycle {:.1} h", sim.cycles.len(), sim.total_hours(), sim.mean_cycle_hours());
    write_csv(&sim.to_dataset(), &a.out)?;
    let mut inputs = Vec::new();
    inputs.extend(a.config.clone());
    Manifest::new("generate", g.seed, cfg.hash(), cfg.values().clone()).write(&a.out, &inputs, &[a.out.clone()])?;
    Ok(())
}

fn train(a: &TrainArgs) -> Result<()> {
    let spec = model_spec(a.model, &a.preset, a.hyperparams.as_deref(), &a.overrides.set)?;
    let data = load_data(&a.data.data, a.data.schema)?;
    let (train, _) = split_data(&data, &a.split)?;
    let model = crate::pipeline::fit(&spec, &train, a.seed)?;
    artifact::save(&model, Some(&a.split), &a.out)?;
    let mut settings = spec.pairs();
    settings.insert("model".into(), a.model.to_string());
    settings.insert("split".into(), a.split.clone());
    settings.insert("schema".into(), format!("{:?}", a.data.schema).to_lowercase());
    let hash = FlatConfig::from_pairs(settings.iter().map(|(k, v)| (k.as_str(), v.as_str()))).hash();
    let mut inputs = vec![a.data.data.clone()];
    inputs.extend(a.hyperparams.clone());
    Manifest::new("train", a.seed, hash, settings).write(&a.out, &inputs, &[a.out.clone()])?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}{ext}"))
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let (model, trained_split) = artifact::load(&a.model)?;
    let split = a.split.clone().or(trained_split).unwrap_or_else(|| "all".into());
    let data = load_data(&a.data.data, a.data.schema)?;
    let (train, test) = split_data(&data, &split)?;
    let mut parts = vec![(if test.is_some() { "train" } else { "all" }, train)];
    parts.extend(test.map(|t| ("test", t)));
    let traces = a.traces.clone().unwrap_or_else(|| sibling(&a.out, "_traces", ""));
    let mut reports = Vec::new();
    let mut outputs = vec![a.out.clone()];
    for (name, part) in &parts {
        if part.is_empty() {
            continue;
        }
        let (report, preds) = model.evaluate(part)?;
        outputs.extend(output::write_traces(&traces, name, part, &preds)?);
        reports.push((*name, report));
    }
    let refs: Vec<(&str, &crate::metrics::MetricsReport)> = reports.iter().map(|(n, r)| (*n, r)).collect();
    output::write_report(&a.out, model.kind().name(), &refs)?;
    let breakdown = sibling(&a.out, "_cycles", ".csv");
    let names: Vec<String> = data.schema.target_names().iter().map(|s| s.to_string()).collect();
    output::write_cycle_breakdown(&breakdown, &names, &refs)?;
    outputs.insert(1, breakdown);
    let mut settings = BTreeMap::new();
    settings.insert("split".to_string(), split);
    settings.insert("schema".to_string(), format!("{:?}", a.data.schema).to_lowercase());
    let hash = FlatConfig::from_pairs(settings.iter().map(|(k, v)| (k.as_str(), v.as_str()))).hash();
    Manifest::new("evaluate", model.seed, hash, settings).write(
        &a.out,
        &[a.model.clone(), a.data.data.clone()],
        &outputs,
    )?;
    Ok(())
}

/// Search settings: `mode` (grid|random), `budget`, `folds` or
/// `validation_fraction`, `fixed.<key>` for settings shared by all
/// candidates, and `space.<key>` for the searched axes (a value list or
/// `uniform:a:b`, `loguniform:a:b`, `int:a:b`). Axes keep file order.
fn search_space(kind: ModelKind, cfg: Option<&FlatConfig>, text: Option<&str>) -> Result<(SearchSpace, bool)> {
    let mut space = SearchSpace::default_for(kind);
    let mut random = kind == ModelKind::Esn;
    let Some(cfg) = cfg else {
        return Ok((space, random));
    };
    if let Some(m) = cfg.raw("mode") {
        random = match m {
            "grid" => false,
            "random" => true,
            _ => return Err(BenchError::Config(format!("search mode '{m}' is not grid or random"))),
        };
    }
    space.budget = cfg.get_or("budget", space.budget)?;
    if let Some(k) = cfg.get("folds")? {
        space.protocol = Protocol::KFold { k };
    }
    if let Some(fraction) = cfg.get("validation_fraction")? {
        space.protocol = Protocol::Holdout { fraction };
    }
    for (k, v) in cfg.section("fixed") {
        space.base.set(&k, &v)?;
    }
    let axes = cfg.section("space");
    if !axes.is_empty() {
        let order = axis_order(text.unwrap_or(""));
        let mut axes: Vec<(String, Distribution)> =
            axes.into_iter().map(|(k, v)| Ok((k, Distribution::parse(&v)?))).collect::<Result<_>>()?;
        axes.sort_by_key(|(k, _)| order.iter().position(|o| o == k).unwrap_or(usize::MAX));
        space.axes = axes;
    }
    cfg.finish()?;
    space.validate()?;
    Ok((space, random))
}

/// Axis names in the order they appear in the space file.
fn axis_order(text: &str) -> Vec<String> {
    let mut in_space = false;
    let mut order = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.starts_with('[') {
            in_space = line == "[space]";
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim().trim_matches('"');
        if let Some(name) = k.strip_prefix("space.") {
            order.push(name.to_string());
        } else if in_space {
            order.push(k.to_string());
        }
    }
    order
}

fn search(a: &SearchArgs) -> Result<()> {
    let text = a.space.as_ref().map(std::fs::read_to_string).transpose()?;
    let cfg = match &text {
        Some(t) => {
            let mut c = FlatConfig::parse_str(t)?;
            c.apply_overrides(&a.overrides.set)?;
            Some(c)
        }
        None if !a.overrides.set.is_empty() => Some(load_config(None, &a.overrides.set)?),
        None => None,
    };
    let (space, random) = search_space(a.model, cfg.as_ref(), text.as_deref())?;
    let data = load_data(&a.data.data, a.data.schema)?;
    let (train, _) = split_data(&data, &a.split)?;
    let result = if random { random_search(&space, &train, a.seed)? } else { grid_search(&space, &train, a.seed)? };
    output::write_search_table(&a.out, &result)?;
    let best_path = sibling(&a.out, ".best", ".toml");
    let mut outputs = vec![a.out.clone()];
    if let Ok(best) = result.best_spec(&space) {
        let text: String = best.pairs().iter().map(|(k, v)| format!("{k} = {}\n", toml_value(v))).collect();
        std::fs::write(&best_path, text)?;
        outputs.push(best_path);
    } else {
        log::warn!("every candidate failed; no best settings written");
    }
    let mut settings = cfg.as_ref().map(|c| c.values().clone()).unwrap_or_default();
    settings.insert("model".into(), a.model.to_string());
    settings.insert("split".into(), a.split.clone());
    settings.insert("mode".into(), if random { "random" } else { "grid" }.into());
    let hash = FlatConfig::from_pairs(settings.iter().map(|(k, v)| (k.as_str(), v.as_str()))).hash();
    let mut inputs = vec![a.data.data.clone()];
    inputs.extend(a.space.clone());
    Manifest::new("search", a.seed, hash, settings).write(&a.out, &inputs, &outputs)?;
    Ok(())
}

/// Quotes everything that is not a plain number.
fn toml_value(v: &str) -> String {
    if v.parse::<f64>().is_ok() && !v.contains(['i', 'n', 'N']) {
        v.to_string()
    } else {
        format!("\"{v}\"")
    }
}

/// Learning-curve config keys: `data` + `schema`, or `generate.<key>` to
/// simulate; `split` (default `random:0.1:0`); `models` (default all);
/// `fractions`; `seed`; `preset`; `<model>.<key>` setting overrides.
fn curve(a: &CurveArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref(), &a.overrides.set)?;
    let mut inputs: Vec<PathBuf> = a.config.iter().cloned().collect();
    let data = match cfg.raw("data") {
        Some(path) => {
            let schema = match cfg.raw("schema").unwrap_or("synthetic") {
                "synthetic" => SchemaKind::Synthetic,
                "plant" => SchemaKind::Plant,
                s => return Err(BenchError::Config(format!("unknown schema '{s}'"))),
            };
            inputs.push(PathBuf::from(path));
            load_data(Path::new(path), schema)?
        }
        None => generate_dataset(&generator_config(&cfg, "generate.")?)?.to_dataset(),
    };
    let split = cfg.raw("split").unwrap_or("random:0.1:0").to_string();
    let (train, test) = split_data(&data, &split)?;
    let test = test.filter(|t| !t.is_empty()).ok_or_else(|| {
        BenchError::Config(format!("split '{split}' leaves no test cycles; a learning curve needs a fixed test set"))
    })?;
    let kinds: Vec<ModelKind> = cfg.list("models")?.unwrap_or_else(|| ModelKind::ALL.to_vec());
    let fractions: Vec<f64> = cfg.list("fractions")?.unwrap_or_else(|| vec![0.05, 0.1, 0.25, 0.5, 1.0]);
    let seed = cfg.get_or("seed", 0u64)?;
    let preset: Preset = cfg.raw("preset").unwrap_or("synthetic").parse()?;
    let mut specs = Vec::new();
    for kind in ModelKind::ALL {
        let section = cfg.section(kind.name());
        if !kinds.contains(&kind) {
            continue;
        }
        let mut spec = ModelSpec::preset(kind, preset);
        for (k, v) in section {
            spec.set(&k, &v)?;
        }
        spec.validate()?;
        specs.push(spec);
    }
    cfg.finish()?;
    let points = learning_curve(&train, &test, &fractions, &specs, seed)?;
    output::write_curve(&a.out, &points)?;
    Manifest::new("learning-curve", seed, cfg.hash(), cfg.values().clone()).write(&a.out, &inputs, &[a.out.clone()])?;
    Ok(())
}

/// Single-line JSON error record for scripts.
pub fn error_line(command: &str, e: &BenchError) -> String {
    serde_json::json!({"status": "error", "command": command, "kind": e.kind(), "message": e.to_string()}).to_string()
}
