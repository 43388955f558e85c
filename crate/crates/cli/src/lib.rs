//! Command-line front end for `dmcrop`: one subcommand per pipeline stage, an
//! end-to-end `pipeline` driven by a ground-truth oracle detector, and overlay
//! rendering.

pub mod args;
mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod overlay;
pub mod pipeline;
pub mod stages;

pub use args::Cli;
pub use commands::run;
pub use error::CliError;
