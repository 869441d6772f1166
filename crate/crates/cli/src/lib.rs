//! Configuration, scenario orchestration and artifact export for `orbroute`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

pub use args::{run, Cli, Command};
pub use commands::{CliError, RunOptions};
pub use config::{parse_config, parse_config_str, ConfigError, RunConfig};
