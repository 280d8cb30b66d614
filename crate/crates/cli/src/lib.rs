//! Reproducible command-line runs over the extraction harness: grid
//! evaluation, augmentation jobs, report rendering and run comparison.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{cmd_augment, cmd_compare, cmd_evaluate, cmd_report, CellSelector};
pub use error::CliError;
pub use manifest::RunManifest;
