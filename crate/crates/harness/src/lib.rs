//! Experiment harness behind the `flexlink` command: configuration, the
//! individual studies, and CSV/SVG output with provenance.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod output;
pub mod svg;

pub use commands::{Command, Overrides};
pub use config::ExperimentConfig;
pub use error::HarnessError;
