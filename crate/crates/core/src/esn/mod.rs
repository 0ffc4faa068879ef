//! Echo state networks: a fixed random leaky-tanh reservoir with a ridge
//! regression readout.

mod reservoir;
mod spectral;

pub use reservoir::{
    esn_collect_states, esn_collect_states_from, esn_design_matrix, esn_fit_readout, esn_normal_equations, esn_predict, esn_update,
    init_reservoir, readout_from_lrr, EsnHyperparams, EsnModel, Reservoir,
};
pub use spectral::{largest_singular_value, scale_to_spectral_radius, spectral_radius, CsrMatrix};
