//! File formats and subcommands of the `sma-safety` binary.

pub mod commands;
pub mod config;
pub mod synth;

pub use commands::{cmd_check_invariance, cmd_fit, cmd_gen_trace, cmd_simulate, exit, GenTraceArgs};
pub use config::{parse_model, parse_scenario, ConfigError, ModelFile, ScenarioFile};
