//! Experiment harness: configuration files, CSV logs, error metrics, the
//! initial-attitude and GNSS-outage studies, and the `aeronav` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod metrics;

pub use cli::cli_main;
pub use error::{HarnessError, Result};
pub use metrics::{compute_metrics, MetricsOptions, MetricsReport};
