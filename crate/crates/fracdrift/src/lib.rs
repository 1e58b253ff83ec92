//! Operational shell around `fracdrift-core`: run configuration, scenario
//! orchestration into self-describing run directories, verification batteries
//! and SVG plots. The `fracdrift` binary exposes these as subcommands.

pub mod config;
pub mod error;
pub mod plots;
pub mod records;
pub mod scenario;
pub mod tolerances;
pub mod verify;

pub use error::HarnessError;
