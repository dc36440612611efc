//! Configuration, command line and file formats on top of `ternlab-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod ledger;
pub mod report;
pub mod sweep;

pub use config::{ExperimentConfig, OutputFormat};
pub use error::CliError;
pub use report::{parse_csv, render_csv, CertificateFile, CsvRow, CSV_COLUMNS};
pub use sweep::{run_sweep, SweepPoint};
