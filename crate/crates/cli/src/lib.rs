//! Config loading, reports and subcommands for the `senv` binary.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run, Cli, CliError, Command};
pub use config::{generate_random, load_config, parse_config, ConfigError, InstanceConfig, ObstacleRange};
pub use report::{instance_digest, RunReport};
