//! `run`: the full experiment pipeline — rates, evolution trace and
//! snapshots, angular profiles, and a combined summary.

use anyhow::Result;
use serde::Serialize;

use collemit::kernel::symmetric_state_residual;
use collemit::{build_kernel, collective_rate, diagonalize};

use crate::config::ExperimentConfig;

use super::angular::angular_stage;
use super::evolve::evolve_stage;
use super::{ensure_dir, join, write_json, AngularSummary, EvolveSummary};

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub n_atoms: usize,
    pub wavelength_um: f64,
    pub gamma1_per_us: f64,
    pub gamma_col_over_gamma1: f64,
    pub symmetric_state_residual: f64,
    pub fitted_early_rate_per_us: Option<f64>,
    pub fit_relative_deviation: Option<f64>,
    pub cone_half_angle_rad: f64,
    pub cone_fraction: f64,
    pub backward_cone_fraction: f64,
    pub grid_convergence_delta: f64,
    pub closure_error: f64,
    pub evolve: EvolveSummary,
    pub angular: AngularSummary,
}

pub fn run_command(config: &ExperimentConfig) -> Result<RunSummary> {
    let out_dir = config.output_dir.clone();
    ensure_dir(&out_dir)?;

    let sample = config.experiment_sample()?;
    let kernel = build_kernel(&sample);
    let gamma_col = collective_rate(&kernel);
    let residual = symmetric_state_residual(&kernel);
    let eigen = diagonalize(&kernel)?;

    let evolve = evolve_stage(config, &sample, &kernel, &eigen, &out_dir)?;
    let angular = angular_stage(config, &sample, &eigen, &out_dir)?;

    let summary = RunSummary {
        n_atoms: sample.len(),
        wavelength_um: config.wavelength_um,
        gamma1_per_us: sample.gamma1(),
        gamma_col_over_gamma1: gamma_col / sample.gamma1(),
        symmetric_state_residual: residual,
        fitted_early_rate_per_us: evolve.fitted_early_rate_per_us,
        fit_relative_deviation: evolve.fit_relative_deviation,
        cone_half_angle_rad: angular.cone_half_angle_rad,
        cone_fraction: angular.cone_fraction,
        backward_cone_fraction: angular.backward_cone_fraction,
        grid_convergence_delta: angular.grid_convergence_delta,
        closure_error: angular.closure_error,
        evolve,
        angular,
    };
    write_json(&join(&out_dir, "summary.json"), &summary)?;
    Ok(summary)
}
