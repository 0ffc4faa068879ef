//! Model artifacts: one JSON document per trained model. The layout is
//! described in `docs/model-format.md`.

use std::collections::BTreeMap;
use std::path::Path;

use cyclecast::dataset::{Schema, Standardizer};
use cyclecast::esn::{init_reservoir, EsnModel};
use cyclecast::linear::{KrrModel, LrrModel};
use cyclecast::neural::{FfnnModel, LstmModel, TrainHistory};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::models::{Hyperparams, ModelKind, ModelSpec};
use crate::pipeline::{Fitted, TrainedModel};
use crate::seed::sha256_hex;

pub const FORMAT: &str = "cyclecast-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Params {
    Lrr(LrrModel),
    Krr(KrrModel),
    Ffnn(FfnnModel),
    /// The reservoir is rebuilt from its seed and the hyperparameters.
    Esn { n_inputs: usize, reservoir_seed: u64, w_out: Array2<f64>, readout_lambda: f64 },
    Lstm(LstmModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Artifact {
    format: String,
    version: u32,
    kind: ModelKind,
    seed: u64,
    hyperparams: BTreeMap<String, String>,
    schema: Schema,
    schema_hash: String,
    standardizer: Standardizer,
    /// Split used to pick the training cycles, in CLI syntax.
    split: Option<String>,
    training: Option<TrainHistory>,
    params: Params,
}

pub fn schema_hash(schema: &Schema) -> String {
    sha256_hex(schema.fingerprint().as_bytes())
}

/// Serializes a model; `split` records how its training cycles were chosen.
pub fn to_json(model: &TrainedModel, split: Option<&str>) -> Result<String> {
    let params = match &model.fitted {
        Fitted::Lrr(m) => Params::Lrr(m.clone()),
        Fitted::Krr(m) => Params::Krr(m.clone()),
        Fitted::Ffnn(m) => Params::Ffnn(m.clone()),
        Fitted::Esn(m) => Params::Esn {
            n_inputs: m.reservoir.n_inputs,
            reservoir_seed: m.reservoir.seed,
            w_out: m.w_out.clone(),
            readout_lambda: m.readout_lambda,
        },
        Fitted::Lstm(m) => Params::Lstm(m.clone()),
    };
    let artifact = Artifact {
        format: FORMAT.into(),
        version: VERSION,
        kind: model.kind(),
        seed: model.seed,
        hyperparams: model.spec.pairs(),
        schema: model.schema.clone(),
        schema_hash: schema_hash(&model.schema),
        standardizer: model.standardizer.clone(),
        split: split.map(str::to_string),
        training: model.history.clone(),
        params,
    };
    let mut text = serde_json::to_string_pretty(&artifact)?;
    text.push('\n');
    Ok(text)
}

/// Parses an artifact; returns the model and its recorded split.
pub fn from_json(text: &str) -> Result<(TrainedModel, Option<String>)> {
    let a: Artifact = serde_json::from_str(text)?;
    if a.format != FORMAT || a.version != VERSION {
        return Err(BenchError::Artifact(format!("unsupported artifact {} v{}", a.format, a.version)));
    }
    if a.schema_hash != schema_hash(&a.schema) {
        return Err(BenchError::Artifact("schema hash does not match the stored schema".into()));
    }
    let spec = ModelSpec::from_pairs(a.kind, a.hyperparams.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    let fitted = match a.params {
        Params::Lrr(m) => Fitted::Lrr(m),
        Params::Krr(m) => Fitted::Krr(m),
        Params::Ffnn(m) => Fitted::Ffnn(m),
        Params::Lstm(m) => Fitted::Lstm(m),
        Params::Esn { n_inputs, reservoir_seed, w_out, readout_lambda } => {
            let Hyperparams::Esn { reservoir, .. } = &spec.hyperparams else {
                return Err(BenchError::Artifact("ESN parameters under a non-ESN kind".into()));
            };
            let reservoir = init_reservoir(reservoir, n_inputs, reservoir_seed)?;
            if w_out.ncols() != 1 + n_inputs + reservoir.hidden() {
                return Err(BenchError::Artifact("ESN readout width does not match the reservoir".into()));
            }
            Fitted::Esn(EsnModel { reservoir, w_out, readout_lambda })
        }
    };
    let kind_matches = matches!(
        (&fitted, a.kind),
        (Fitted::Lrr(_), ModelKind::Lrr)
            | (Fitted::Krr(_), ModelKind::Krr)
            | (Fitted::Ffnn(_), ModelKind::Ffnn)
            | (Fitted::Esn(_), ModelKind::Esn)
            | (Fitted::Lstm(_), ModelKind::Lstm)
    );
    if !kind_matches {
        return Err(BenchError::Artifact(format!("parameters do not belong to a {} model", a.kind)));
    }
    let model =
        TrainedModel { spec, seed: a.seed, schema: a.schema, standardizer: a.standardizer, fitted, history: a.training };
    Ok((model, a.split))
}

pub fn save(model: &TrainedModel, split: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(model, split)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(TrainedModel, Option<String>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Artifact(format!("cannot read {}: {e}", path.display())))?;
    from_json(&text)
}
