//! Command-line front end for `expforge`: configuration, subcommands and
//! artifact writers.

pub mod cli;
pub mod commands;
pub mod complex;
pub mod config;
pub mod io;

pub use commands::{run, CliError};
