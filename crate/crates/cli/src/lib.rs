//! Command-line front end: configuration, CSV ingestion, orchestration of
//! a fit and emission of result tables.

pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod run;

pub use config::{Preset, RunConfig};
pub use error::{CliError, Result};
pub use run::{dd_table, fit, fit_from_file, simulate, write_simulation, FitOutcome, FitOverrides};
