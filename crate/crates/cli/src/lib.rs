//! Experiment orchestration for the cooperative-emission simulator:
//! configuration ingestion, figure-reproduction pipelines, robustness
//! sweeps, and deterministic file output.

pub mod commands;
pub mod config;
