//! Experiment harness: configuration, the per-window simulation chain, the
//! four experiments, and their report files.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod input;
pub mod output;
pub mod pipeline;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::HarnessError;
pub use experiments::{run, Report, Run};
