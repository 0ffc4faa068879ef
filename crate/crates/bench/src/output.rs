//! Tidy CSV outputs and manifests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use cyclecast::dataset::{format_value, CycleDataset};
use serde::Serialize;

use crate::curve::CurvePoint;
use crate::error::Result;
use crate::metrics::MetricsReport;
use crate::pipeline::CyclePrediction;
use crate::search::SearchResult;
use crate::seed::sha256_hex;

pub const REPORT_COLUMNS: [&str; 7] = ["model", "target", "split", "mse", "nmse", "mae", "r2"];

/// Appends one row per target (and the averaged row) of `report`.
pub fn report_rows<W: Write>(w: &mut csv::Writer<W>, model: &str, split: &str, report: &MetricsReport) -> Result<()> {
    for t in &report.targets {
        w.write_record([
            model,
            &t.target,
            split,
            &format_value(t.mse),
            &format_value(t.nmse),
            &format_value(t.mae),
            &format_value(t.r2),
        ])?;
    }
    Ok(())
}

pub fn write_report(path: &Path, model: &str, reports: &[(&str, &MetricsReport)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_COLUMNS)?;
    for (split, r) in reports {
        report_rows(&mut w, model, split, r)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-cycle MSE/MAE breakdown.
pub fn write_cycle_breakdown(path: &Path, targets: &[String], reports: &[(&str, &MetricsReport)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["split", "cycle_id", "rows", "target", "mse", "mae"])?;
    for (split, r) in reports {
        for c in &r.cycles {
            for (j, t) in targets.iter().enumerate() {
                w.write_record([
                    split.to_string(),
                    c.cycle_id.to_string(),
                    c.rows.to_string(),
                    t.clone(),
                    format_value(c.mse[j]),
                    format_value(c.mae[j]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// One CSV per cycle with the time index, observed and predicted targets.
/// Returns the written paths.
pub fn write_traces(dir: &Path, split: &str, data: &CycleDataset, preds: &[CyclePrediction]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let names = data.schema.target_names();
    let by_id: BTreeMap<u64, &cyclecast::dataset::Cycle> = data.cycles.iter().map(|c| (c.id, c)).collect();
    let mut written = Vec::new();
    for p in preds {
        let cycle = by_id[&p.cycle_id];
        let path = dir.join(format!("{split}_cycle_{}.csv", p.cycle_id));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["cycle_id".to_string(), "t".to_string()];
        for n in &names {
            header.push(n.to_string());
            header.push(format!("{n}_pred"));
        }
        w.write_record(&header)?;
        for (r, row) in p.predictions.rows().into_iter().enumerate() {
            let t = p.start + r;
            let mut rec = vec![p.cycle_id.to_string(), t.to_string()];
            for (j, v) in row.iter().enumerate() {
                rec.push(format_value(cycle.targets[[t, j]]));
                rec.push(format_value(*v));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Tidy learning-curve rows: model, fraction, split, target, metric, value.
pub fn write_curve(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "fraction", "train_cycles", "split", "target", "metric", "value"])?;
    for p in points {
        for (split, r) in [("train", &p.train), ("test", &p.test)] {
            for t in &r.targets {
                for (metric, v) in [("mse", t.mse), ("nmse", t.nmse), ("mae", t.mae), ("r2", t.r2)] {
                    w.write_record([
                        p.model.clone(),
                        format_value(p.fraction),
                        p.train_cycles.len().to_string(),
                        split.to_string(),
                        t.target.clone(),
                        metric.to_string(),
                        format_value(v),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// CV table: one row per candidate, one column per searched setting.
pub fn write_search_table(path: &Path, result: &SearchResult) -> Result<()> {
    let keys: Vec<String> = result
        .candidates
        .iter()
        .flat_map(|c| c.settings.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["candidate".to_string(), "status".into(), "score".into(), "best".into()];
    header.extend(keys.iter().cloned());
    header.push("error".into());
    w.write_record(&header)?;
    for c in &result.candidates {
        let (status, score, error) = match &c.outcome {
            Ok(s) => ("ok", format_value(*s), String::new()),
            Err(e) => ("failed", String::new(), e.clone()),
        };
        let mut rec = vec![c.index.to_string(), status.into(), score, (result.best == Some(c.index)).to_string()];
        rec.extend(keys.iter().map(|k| c.settings.get(k).cloned().unwrap_or_default()));
        rec.push(error);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one command's outputs. Holds no timestamps or absolute
/// paths so reruns reproduce it byte for byte.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub settings: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn digest(path: &Path, base: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path)?;
    let shown = path.strip_prefix(base).unwrap_or(path);
    let shown = if path.is_absolute() && shown == path {
        path.file_name().map(PathBuf::from).unwrap_or_default()
    } else {
        shown.to_path_buf()
    };
    Ok(FileDigest { path: shown.to_string_lossy().replace('\\', "/"), sha256: sha256_hex(&bytes) })
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_hash: String, settings: BTreeMap<String, String>) -> Self {
        Self {
            tool: "cyclecast".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config_hash,
            settings,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Writes the manifest next to `primary` as `<primary>.manifest.json`.
    /// File paths are recorded relative to the manifest's directory.
    pub fn write(mut self, primary: &Path, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<PathBuf> {
        let base = primary.parent().unwrap_or(Path::new("")).to_path_buf();
        self.inputs = inputs.iter().map(|p| digest(p, &base)).collect::<Result<_>>()?;
        self.outputs = outputs.iter().map(|p| digest(p, &base)).collect::<Result<_>>()?;
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
