//! File formats, run configuration and the `simulate | fit | summarize |
//! study` commands behind the `ctsteps` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::{cmd_fit, cmd_simulate, cmd_study, simulate, summarize, StudyReport};
pub use config::{Overrides, RunConfig};
pub use error::{CliError, CliResult};
