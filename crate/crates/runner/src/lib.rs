//! Experiment runner for exploratory-HJB Langevin minimization.
//!
//! Reads TOML experiment configs, drives training, Langevin ensembles and
//! the finite-difference reference from [`ehjb_core`], and writes one
//! directory of artifacts per run. The `ehjb` binary is a thin wrapper
//! around [`cli::run`].

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{resolve, ExperimentConfig, ResolvedRun};
pub use error::{Result, RunError};
