//! Experiment driver for the farming simulator: configuration, commands, CSV output
//! and figure scripts.

pub mod config;
pub mod error;
pub mod experiments;
pub mod figures;
pub mod output;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::CliError;
