//! Command-line driver: experiment configs, reports and the four commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_design, cmd_learn, cmd_reproduce, cmd_spectrum, report_exit_code, trace_path, RunOptions};
pub use config::{bundled, parse_config, parse_gain, ExperimentConfig};
pub use error::CliError;
pub use report::RunReport;
