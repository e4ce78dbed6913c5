//! Command-line front-end for `lockdown-core`.
//!
//! Exit status: 0 on success, 1 when output cannot be written, 2 on invalid
//! input, 3 when the solver fails.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::run;
pub use config::Cli;
pub use error::CliError;
