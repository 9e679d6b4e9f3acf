//! The `ftg` command-line tool: fitting, sampling, goodness of fit,
//! risk-capital simulation and plot data for full-tails gamma loss models.
//!
//! Every command writes its primary output (text or JSON) to stdout or
//! `--out`, and a [`RunManifest`] describing the run to stderr or beside the
//! output file.

pub mod args;
pub mod commands;
pub mod error;
pub mod format;
pub mod manifest;

pub use commands::{run, FitFailure, FitReport, LrtSummary, Outcome, PlotData, SimpleGofReport};
pub use error::{CliError, EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE};
pub use manifest::RunManifest;
