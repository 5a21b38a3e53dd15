//! Experiment runner, config parsing and table output for the `minkcap` binary.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod fixtures;
pub mod golden;
pub mod plot;
pub mod shape;
pub mod table;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{default_config, run, ExperimentError, ExperimentOutput};
pub use table::{Check, Table};
