//! Command-line front end: file formats, error mapping and subcommands.

pub mod commands;
pub mod error;
pub mod io;

pub use commands::{run, run_args, Cli, Outcome};
pub use error::CliError;
