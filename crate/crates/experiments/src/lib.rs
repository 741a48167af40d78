//! Experiment pipelines for grating solves and shape optimization: strict
//! TOML configurations, drivers for each command, and CSV/SVG output.

pub mod config;
pub mod error;
pub mod output;
pub mod runs;

pub use config::ExperimentConfig;
pub use error::{ExperimentError, Result};
