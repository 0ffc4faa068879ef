//! Cycle-structured tabular data: each cycle holds an input matrix (process
//! conditions) and a target matrix (KPIs), one row per hour.

mod csv_io;
mod plant;
mod split;
mod standardize;
mod window;

pub use csv_io::{format_value, read_csv, read_csv_from, write_csv, write_csv_to};
pub use plant::{engineer_features_realworld, plant_features_schema, raw_plant_schema};
pub use split::{split_by_cycles, SplitSpec};
pub use standardize::{fit_standardizer, Standardizer};
pub use window::{window_stack, WindowedCycle, WindowedView};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub inputs: Vec<Column>,
    pub targets: Vec<Column>,
    /// Input column that must increase strictly within a cycle.
    pub time_column: Option<String>,
    /// Name of the catalyst-charge column in files, if the data has one.
    pub charge_column: Option<String>,
}

impl Schema {
    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|c| c.name == name)
    }

    pub fn target_index(&self, name: &str) -> Option<usize> {
        self.targets.iter().position(|c| c.name == name)
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn target_names(&self) -> Vec<&str> {
        self.targets.iter().map(|c| c.name.as_str()).collect()
    }

    /// Stable textual fingerprint of the column layout, used to check that a
    /// saved model is applied to compatible data.
    pub fn fingerprint(&self) -> String {
        let cols = |cs: &[Column]| cs.iter().map(|c| format!("{}[{}]", c.name, c.unit)).collect::<Vec<_>>().join(",");
        format!("x:{};y:{}", cols(&self.inputs), cols(&self.targets))
    }
}

/// One degradation cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub id: u64,
    pub charge: Option<u64>,
    /// T × d_x
    pub inputs: Array2<f64>,
    /// T × d_y
    pub targets: Array2<f64>,
    /// First row that is scored.
    pub t0_offset: usize,
}

impl Cycle {
    pub fn new(id: u64, inputs: Array2<f64>, targets: Array2<f64>) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(Error::InvalidInput(format!("cycle {id} is empty")));
        }
        if inputs.nrows() != targets.nrows() {
            return Err(Error::InvalidInput(format!(
                "cycle {id}: {} input rows but {} target rows",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        if inputs.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("cycle {id} contains non-finite values")));
        }
        Ok(Self { id, charge: None, inputs, targets, t0_offset: 0 })
    }

    pub fn with_charge(mut self, charge: u64) -> Self {
        self.charge = Some(charge);
        self
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Targets of the scored rows.
    pub fn scored_targets(&self) -> ArrayView2<'_, f64> {
        self.targets.slice(ndarray::s![self.t0_offset.min(self.len()).., ..])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleDataset {
    pub schema: Schema,
    pub cycles: Vec<Cycle>,
}

impl CycleDataset {
    pub fn new(schema: Schema, cycles: Vec<Cycle>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for c in &cycles {
            if !seen.insert(c.id) {
                return Err(Error::InvalidInput(format!("duplicate cycle id {}", c.id)));
            }
            if c.inputs.ncols() != schema.inputs.len() || c.targets.ncols() != schema.targets.len() {
                return Err(Error::InvalidInput(format!("cycle {} does not match the schema", c.id)));
            }
        }
        Ok(Self { schema, cycles })
    }

    pub fn empty(schema: Schema) -> Self {
        Self { schema, cycles: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.schema.inputs.len()
    }

    pub fn n_targets(&self) -> usize {
        self.schema.targets.len()
    }

    pub fn total_rows(&self) -> usize {
        self.cycles.iter().map(Cycle::len).sum()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.cycles.iter().map(|c| c.id).collect()
    }

    /// Cycles with the given ids, in dataset order.
    pub fn select(&self, ids: &[u64]) -> Self {
        let wanted: std::collections::HashSet<u64> = ids.iter().copied().collect();
        Self {
            schema: self.schema.clone(),
            cycles: self.cycles.iter().filter(|c| wanted.contains(&c.id)).cloned().collect(),
        }
    }

    /// Sets the first scored row of every cycle.
    pub fn with_eval_start(mut self, t0: usize) -> Self {
        for c in &mut self.cycles {
            c.t0_offset = t0;
        }
        self
    }

    /// Drops cycles with fewer than `min_rows` rows.
    pub fn filter_min_len(&self, min_rows: usize) -> Self {
        Self {
            schema: self.schema.clone(),
            cycles: self.cycles.iter().filter(|c| c.len() >= min_rows).cloned().collect(),
        }
    }
}
