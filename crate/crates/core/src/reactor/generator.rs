use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::activity::{step_activity, MIN_ACTIVITY};
use super::kinetics::KineticParams;
use super::plug_flow::{integrate_plug_flow, selectivity_conversion};
use super::process::{sample_process_params, ParamRanges, ProcessParams};
use super::species::SpeciesSet;
use crate::dataset::{Column, Cycle, CycleDataset, Schema};
use crate::error::{Error, Result};

pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub kinetics: KineticParams,
    pub species: SpeciesSet,
    pub ranges: ParamRanges,
    pub seed: u64,
    /// Simulated operating time. Generation stops once it is used up; the
    /// unfinished last cycle is discarded.
    pub horizon_years: f64,
    /// Stop after this many complete cycles, if set.
    pub max_cycles: Option<usize>,
    pub plug_flow_substeps: usize,
    pub activity_substeps: usize,
    /// End-of-run criterion: a cycle ends at the first hour with conversion
    /// below this fraction.
    pub eor_conversion: f64,
    pub max_hold_hours: u32,
    /// Hard cap on cycle length.
    pub max_cycle_hours: usize,
    pub min_activity: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            kinetics: KineticParams::default(),
            species: SpeciesSet::default(),
            ranges: ParamRanges::default(),
            seed: 0,
            horizon_years: 50.0,
            max_cycles: None,
            plug_flow_substeps: 512,
            activity_substeps: 32,
            eor_conversion: 0.75,
            max_hold_hours: 24,
            max_cycle_hours: 10_000,
            min_activity: MIN_ACTIVITY,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.kinetics.validate()?;
        self.species.validate()?;
        self.ranges.validate()?;
        if !(self.horizon_years > 0.0) {
            return Err(Error::InvalidParameters("horizon must be positive".into()));
        }
        if self.plug_flow_substeps == 0 || self.activity_substeps == 0 || self.max_hold_hours == 0 {
            return Err(Error::InvalidParameters("substeps and hold duration must be >= 1".into()));
        }
        if !(self.eor_conversion > 0.0 && self.eor_conversion < 1.0) {
            return Err(Error::InvalidParameters("EOR conversion must lie in (0, 1)".into()));
        }
        if !(self.min_activity > 0.0 && self.min_activity < 1.0) {
            return Err(Error::InvalidParameters("minimum activity must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Hidden simulator state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactorState {
    pub activity: f64,
    pub params: ProcessParams,
    /// Hours since the last regeneration.
    pub time_on_stream: f64,
    pub cycle_index: u64,
    /// kg of olefine fed since the last regeneration.
    pub cumulative_olefine_feed: f64,
}

/// One hourly observation. Conversion and selectivity are fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub params: ProcessParams,
    pub time_on_stream: f64,
    pub conversion: f64,
    pub selectivity: f64,
    /// Hidden state, not part of the exported dataset.
    pub activity: f64,
    pub cumulative_olefine_feed: f64,
    /// |ΣF_out - F| / F at this time point.
    pub mass_balance_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimCycle {
    pub id: u64,
    pub records: Vec<SimRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub cycles: Vec<SimCycle>,
    pub clamp_events: usize,
}

impl SimOutput {
    pub fn total_hours(&self) -> usize {
        self.cycles.iter().map(|c| c.records.len()).sum()
    }

    pub fn mean_cycle_hours(&self) -> f64 {
        self.total_hours() as f64 / self.cycles.len().max(1) as f64
    }

    /// Converts to the tabular dataset in reporting units (mbar, °C, %).
    pub fn to_dataset(&self) -> CycleDataset {
        let cycles = self
            .cycles
            .iter()
            .map(|c| {
                let n = c.records.len();
                let mut inputs = ndarray::Array2::zeros((n, 6));
                let mut targets = ndarray::Array2::zeros((n, 2));
                for (row, r) in c.records.iter().enumerate() {
                    let p = &r.params;
                    inputs[[row, 0]] = p.pressure / 100.0;
                    inputs[[row, 1]] = p.temperature_c();
                    inputs[[row, 2]] = p.mass_flow;
                    inputs[[row, 3]] = 100.0 * p.mu_olefine;
                    inputs[[row, 4]] = 100.0 * p.mu_o2;
                    inputs[[row, 5]] = r.time_on_stream;
                    targets[[row, 0]] = 100.0 * r.conversion;
                    targets[[row, 1]] = 100.0 * r.selectivity;
                }
                Cycle::new(c.id, inputs, targets).expect("simulator output is well formed")
            })
            .collect();
        CycleDataset::new(synthetic_schema(), cycles).expect("cycle ids are unique")
    }
}

/// Column layout of the synthetic dataset.
pub fn synthetic_schema() -> Schema {
    Schema {
        inputs: vec![
            Column::new("p_mbar", "mbar"),
            Column::new("T_C", "°C"),
            Column::new("F_kgph", "kg/h"),
            Column::new("mu_olef_pct", "%"),
            Column::new("mu_O2_pct", "%"),
            Column::new("t", "h"),
        ],
        targets: vec![Column::new("C_pct", "%"), Column::new("S_pct", "%")],
        time_column: Some("t".into()),
        charge_column: None,
    }
}

/// Runs the mechanistic model hour by hour. Each cycle starts with a fresh
/// catalyst; operating points are held for a random 1..=24 h and follow a
/// random walk that carries over cycle boundaries. A cycle ends with the
/// first record whose conversion falls below the EOR threshold.
pub fn generate_dataset(config: &GeneratorConfig) -> Result<SimOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let horizon_hours = (config.horizon_years * HOURS_PER_YEAR).round() as usize;
    let mut cycles = Vec::new();
    let mut clamp_events = 0;
    let mut elapsed = 0usize;
    let mut last_params: Option<ProcessParams> = None;

    'cycles: while config.max_cycles.is_none_or(|n| cycles.len() < n) {
        let mut state = ReactorState {
            activity: 1.0,
            params: sample_process_params(last_params.as_ref(), &config.ranges, &mut rng),
            time_on_stream: 0.0,
            cycle_index: cycles.len() as u64 + 1,
            cumulative_olefine_feed: 0.0,
        };
        let mut hold = rng.random_range(1..=config.max_hold_hours);
        last_params = Some(state.params);
        let mut records = Vec::new();
        loop {
            if hold == 0 {
                state.params = sample_process_params(Some(&state.params), &config.ranges, &mut rng);
                hold = rng.random_range(1..=config.max_hold_hours);
                last_params = Some(state.params);
            }
            let params = state.params;
            let outlet = integrate_plug_flow(
                &params,
                state.activity,
                &config.species,
                &config.kinetics,
                config.plug_flow_substeps,
            )?;
            clamp_events += outlet.clamp_events;
            let perf = selectivity_conversion(&outlet.inlet_concentrations, &outlet.concentrations)?;
            let selectivity = perf.selectivity.ok_or_else(|| Error::Simulation {
                message: "selectivity undefined (no olefine consumed)".into(),
                state: format!("{state:?}"),
            })?;
            state.cumulative_olefine_feed += params.mu_olefine * params.mass_flow;
            records.push(SimRecord {
                params,
                time_on_stream: state.time_on_stream,
                conversion: perf.conversion,
                selectivity,
                activity: state.activity,
                cumulative_olefine_feed: state.cumulative_olefine_feed,
                mass_balance_error: (outlet.total_mass_flow() - params.mass_flow).abs() / params.mass_flow,
            });
            elapsed += 1;

            if perf.conversion < config.eor_conversion {
                cycles.push(SimCycle { id: state.cycle_index, records });
                if elapsed >= horizon_hours {
                    break 'cycles;
                }
                continue 'cycles;
            }
            if elapsed >= horizon_hours {
                break 'cycles;
            }
            if records.len() >= config.max_cycle_hours {
                return Err(Error::Generation(format!(
                    "cycle {} exceeded {} h without reaching the EOR criterion",
                    state.cycle_index, config.max_cycle_hours
                )));
            }
            state.activity = step_activity(
                state.activity,
                &params,
                1.0,
                &config.kinetics,
                config.activity_substeps,
                config.min_activity,
            )?;
            state.time_on_stream += 1.0;
            hold -= 1;
        }
    }
    Ok(SimOutput { cycles, clamp_events })
}
