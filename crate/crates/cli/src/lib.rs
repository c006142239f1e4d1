//! Experiment harness over `rwo_core`: configuration, ensemble runs and
//! long-format CSV plus JSON summaries.

pub mod acceptance;
pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod flags;
pub mod record;

pub use config::{ExperimentConfig, ExperimentKind, FieldKind};
pub use error::{CliError, Result};
pub use experiments::run_experiment;
pub use record::{Row, RunRecord, Value};
