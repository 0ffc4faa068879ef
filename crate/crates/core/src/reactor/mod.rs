//! Mechanistic simulator of a fixed-bed oxidation reactor with slowly
//! deactivating catalyst, used to generate synthetic degradation cycles.

pub mod activity;
pub mod generator;
pub mod kinetics;
pub mod plug_flow;
pub mod process;
pub mod species;

pub use activity::{deactivation_rate, step_activity, MIN_ACTIVITY};
pub use generator::{generate_dataset, synthetic_schema, GeneratorConfig, ReactorState, SimCycle, SimOutput, SimRecord};
pub use kinetics::{reaction_rates, KineticParams};
pub use plug_flow::{concentrations_from_fractions, integrate_plug_flow, residence_time, selectivity_conversion, Outlet, Performance};
pub use process::{sample_process_params, GridAxis, ParamRanges, ProcessParams};
pub use species::SpeciesSet;
