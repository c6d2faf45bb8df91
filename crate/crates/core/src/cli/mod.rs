//! Configuration and experiment orchestration for the `pathslice` binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_str, ExperimentConfig};
pub use run::{run, Command, RunOutput, Summary};
