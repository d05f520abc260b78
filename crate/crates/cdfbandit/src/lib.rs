//! Experiment harness for `cdfbandit-core`: TOML configuration, CSV/JSON
//! outputs, regression-rate sweeps, multi-seed runs, slope fitting and the
//! `cdfbandit` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod runner;
pub mod slope;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use slope::fit_loglog_slope;
