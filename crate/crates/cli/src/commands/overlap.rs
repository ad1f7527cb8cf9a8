//! `overlap`: mode-overlap fidelity between two explicit sample tables.

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::Serialize;

use collemit::geometry::load_sample;
use collemit::{build_angular_grid, build_kernel, diagonalize, mode_overlap, mode_projection};

use crate::config::ExperimentConfig;

use super::{ensure_dir, join, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct OverlapSummary {
    pub sample_a: String,
    pub sample_b: String,
    pub n_atoms_a: usize,
    pub n_atoms_b: usize,
    pub grid_n_polar: usize,
    pub grid_n_azimuth: usize,
    pub fidelity: f64,
}

pub fn overlap_command(
    config: &ExperimentConfig,
    sample_a: &Path,
    sample_b: &Path,
) -> Result<OverlapSummary> {
    let a = load_sample(sample_a)
        .with_context(|| format!("cannot load sample table {}", sample_a.display()))?;
    let b = load_sample(sample_b)
        .with_context(|| format!("cannot load sample table {}", sample_b.display()))?;

    let grid = Arc::new(build_angular_grid(config.n_polar, config.n_azimuth)?);
    let modefn_a = mode_projection(&a, &diagonalize(&build_kernel(&a))?, Arc::clone(&grid));
    let modefn_b = mode_projection(&b, &diagonalize(&build_kernel(&b))?, Arc::clone(&grid));
    let fidelity = mode_overlap(&modefn_a, &modefn_b)?;

    let summary = OverlapSummary {
        sample_a: sample_a.display().to_string(),
        sample_b: sample_b.display().to_string(),
        n_atoms_a: a.len(),
        n_atoms_b: b.len(),
        grid_n_polar: config.n_polar,
        grid_n_azimuth: config.n_azimuth,
        fidelity,
    };
    ensure_dir(&config.output_dir)?;
    write_json(&join(&config.output_dir, "overlap.json"), &summary)?;
    Ok(summary)
}
