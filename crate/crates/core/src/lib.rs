//! Cycle-structured time-series forecasting: a catalyst-deactivation reactor
//! simulator, cycle-aware datasets, and closed-form, neural and reservoir
//! forecasting models.

pub mod dataset;
pub mod error;
pub mod esn;
pub mod linalg;
pub mod linear;
pub mod neural;
pub mod reactor;

pub use error::{Error, Result};
