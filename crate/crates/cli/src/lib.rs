//! File formats, experiment drivers and subcommands for the `predproto` tool.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod table;

pub use error::{CliError, Result};
