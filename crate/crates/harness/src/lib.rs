//! Experiment harness: configuration loading, the training loop, the
//! altitude and baseline experiments, and CSV/manifest output.

pub mod cli;
pub mod config;
mod error;
pub mod experiments;
pub mod output;
pub mod train;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
