//! Driver for the `pharmonic` binary: configuration, single runs, sweeps
//! over the penalty, regularization, time-step and mesh parameters,
//! chromaticity denoising of PPM images, and numerical self-checks.

pub mod check;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use check::{cmd_check, CheckOptions};
pub use commands::{cmd_denoise, cmd_run, cmd_sweep, Invocation, SweepAxis};
pub use config::RunConfig;
pub use error::CliError;
