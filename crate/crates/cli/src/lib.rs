//! Command-line driver for `eat-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
