//! `rates`: kernel assembly and collective-rate summary.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use collemit::kernel::symmetric_state_residual;
use collemit::{build_kernel, collective_rate};

use crate::config::ExperimentConfig;

use super::{create_file, ensure_dir, join, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct RatesSummary {
    pub n_atoms: usize,
    pub wavelength_um: f64,
    pub gamma1_per_us: f64,
    pub gamma_col_per_us: f64,
    pub gamma_col_over_gamma1: f64,
    /// ‖F β₀ − (γ_col/γ₁) β₀‖: zero iff the symmetric state is an eigenvector.
    pub symmetric_state_residual: f64,
}

pub fn rates_command(
    config: &ExperimentConfig,
    dump_kernel: Option<&Path>,
) -> Result<RatesSummary> {
    let sample = config.experiment_sample()?;
    let kernel = build_kernel(&sample);
    let gamma_col = collective_rate(&kernel);
    let summary = RatesSummary {
        n_atoms: sample.len(),
        wavelength_um: config.wavelength_um,
        gamma1_per_us: sample.gamma1(),
        gamma_col_per_us: gamma_col,
        gamma_col_over_gamma1: gamma_col / sample.gamma1(),
        symmetric_state_residual: symmetric_state_residual(&kernel),
    };

    ensure_dir(&config.output_dir)?;
    write_json(&join(&config.output_dir, "rates.json"), &summary)?;
    if let Some(path) = dump_kernel {
        let mut out = create_file(path)?;
        collemit::export::write_kernel_matrix(&mut out, &kernel)?;
    }
    Ok(summary)
}
