//! `evolve`: population trace, per-atom snapshots, and the early-decay fit.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use collemit::export::{write_atom_snapshot, write_population_trace};
use collemit::{
    build_kernel, collective_rate, diagonalize, fit_early_decay, population_trace, CouplingKernel,
    EigenSystem, SampleGeometry,
};

use crate::config::ExperimentConfig;

use super::{create_file, ensure_dir, join, time_label, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub n_atoms: usize,
    pub gamma_col_per_us: f64,
    pub gamma_col_over_gamma1: f64,
    /// 2γ_fit from the trace, when the P ≥ 0.7 window holds enough samples.
    pub fitted_early_rate_per_us: Option<f64>,
    /// Relative deviation of the fit from 2γ_col.
    pub fit_relative_deviation: Option<f64>,
    pub final_time_us: f64,
    pub final_population: f64,
    pub clamped_negative_eigenvalues: usize,
}

pub fn evolve_command(config: &ExperimentConfig) -> Result<EvolveSummary> {
    let sample = config.experiment_sample()?;
    let kernel = build_kernel(&sample);
    let eigen = diagonalize(&kernel)?;
    evolve_stage(config, &sample, &kernel, &eigen, &config.output_dir)
}

/// The evolve pipeline against an existing eigensystem (shared with `run`).
pub fn evolve_stage(
    config: &ExperimentConfig,
    sample: &SampleGeometry,
    kernel: &CouplingKernel,
    eigen: &EigenSystem,
    out_dir: &Path,
) -> Result<EvolveSummary> {
    ensure_dir(out_dir)?;
    let gamma1 = sample.gamma1();
    let gamma_col = collective_rate(kernel);
    let times = &config.schedule;

    let populations = population_trace(eigen, times, gamma1)?;

    let mut trace = create_file(&join(out_dir, "population.csv"))?;
    write_population_trace(&mut trace, times, &populations, gamma_col)?;

    let snapshot_dir = out_dir.join("snapshots");
    ensure_dir(&snapshot_dir)?;
    for (i, &t) in times.iter().enumerate() {
        let state = collemit::propagate(eigen, t, gamma1)?;
        let name = format!("snapshot_{i:04}_t{}us.csv", time_label(t));
        let mut out = create_file(&snapshot_dir.join(name))?;
        write_atom_snapshot(&mut out, sample, &state)?;
    }

    let fitted = match fit_early_decay(times, &populations) {
        Ok(rate) => Some(rate),
        Err(e) => {
            log::warn!("early-decay fit unavailable: {e}");
            None
        }
    };

    let summary = EvolveSummary {
        n_atoms: sample.len(),
        gamma_col_per_us: gamma_col,
        gamma_col_over_gamma1: gamma_col / gamma1,
        fitted_early_rate_per_us: fitted,
        fit_relative_deviation: fitted.map(|f| (f - 2.0 * gamma_col).abs() / (2.0 * gamma_col)),
        final_time_us: *times.last().unwrap(),
        final_population: *populations.last().unwrap(),
        clamped_negative_eigenvalues: eigen.clamped_negative_count(),
    };
    write_json(&join(out_dir, "evolve.json"), &summary)?;
    Ok(summary)
}
