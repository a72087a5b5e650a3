//! Command-line front end for regime-scout: config parsing, run-directory
//! file formats and SVG figures.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod plot;

pub use commands::Figure;
pub use error::CliError;
