//! IO, configuration, reporting and the command line for `sparsecast-core`.

pub mod cli;
pub mod config;
pub mod csv_io;
mod error;
pub mod model_file;
pub mod report;

pub use error::{CliError, CsvError};
