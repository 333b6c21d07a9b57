//! Experiment driver for the betaproc toolkit: TOML configs, seeded runs,
//! stamped CSV/JSON outputs and static SVG plots.

// `!(x > 0.0)` is deliberate: it rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{ExperimentConfig, ExperimentType, Format};
