//! Experiment runner for the `varsel` binary.

pub mod config;
pub mod metrics;
pub mod run;
