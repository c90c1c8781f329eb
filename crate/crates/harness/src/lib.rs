//! Experiment harness for `feaslift`: configuration, the signal-compression
//! preset, deterministic CSV traces, verification suites and the CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod problem;
pub mod trace_csv;
pub mod verify;

pub use config::{ExperimentConfig, Method, RawConfig};
pub use error::{HResult, HarnessError};
pub use experiment::{run_compare, run_experiment, Comparison, Outcome, Summary};
