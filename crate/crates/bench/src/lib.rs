//! Evaluation harness for the cyclecast models: cycle-weighted metrics,
//! k-fold CV, grid and random search, learning curves, model artifacts and
//! the command-line driver.

pub mod artifact;
pub mod cli;
pub mod config;
pub mod curve;
pub mod error;
pub mod metrics;
pub mod models;
pub mod output;
pub mod pipeline;
pub mod search;
pub mod seed;

pub use error::{BenchError, Result};
