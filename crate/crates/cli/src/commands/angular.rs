//! `angular`: directional emission profiles, cone fraction, and the
//! grid-convergence check.

use std::path::Path;
use std::sync::Arc;

use anyhow::Result;
use serde::Serialize;

use collemit::export::write_angular_profile;
use collemit::field::DARK_MODE_THRESHOLD;
use collemit::{
    angular_density, build_angular_grid, build_kernel, cone_fraction, diagonalize, mode_projection,
    EigenSystem, SampleGeometry,
};

use crate::config::ExperimentConfig;

use super::{create_file, ensure_dir, join, time_label, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct AngularSummary {
    pub n_atoms: usize,
    pub grid_n_polar: usize,
    pub grid_n_azimuth: usize,
    pub cone_axis: [f64; 3],
    pub cone_half_angle_rad: f64,
    /// Forward cone fraction of the fully emitted profile.
    pub cone_fraction: f64,
    /// Same cone around the opposite axis; forward + backward is the
    /// fraction within the half-angle of the sample axis as a line.
    pub backward_cone_fraction: f64,
    pub total_emitted: f64,
    /// |total + survivors − 1| at t = ∞; pure quadrature error.
    pub closure_error: f64,
    pub dark_mode_count: usize,
    pub doubled_grid_cone_fraction: f64,
    /// |cone(reference grid) − cone(doubled grid)|.
    pub grid_convergence_delta: f64,
}

pub fn angular_command(config: &ExperimentConfig) -> Result<AngularSummary> {
    let sample = config.experiment_sample()?;
    let eigen = diagonalize(&build_kernel(&sample))?;
    angular_stage(config, &sample, &eigen, &config.output_dir)
}

/// The angular pipeline against an existing eigensystem (shared with `run`).
pub fn angular_stage(
    config: &ExperimentConfig,
    sample: &SampleGeometry,
    eigen: &EigenSystem,
    out_dir: &Path,
) -> Result<AngularSummary> {
    ensure_dir(out_dir)?;
    let axis = sample.k0_direction();
    let half_angle = config.cone_half_angle_rad;

    let grid = Arc::new(build_angular_grid(config.n_polar, config.n_azimuth)?);
    let modefn = mode_projection(sample, eigen, Arc::clone(&grid));

    for &t in &config.profile_times_us {
        let profile = angular_density(&modefn, t)?;
        let mut out = create_file(&join(out_dir, &format!("profile_t{}us.csv", time_label(t))))?;
        write_angular_profile(&mut out, &profile)?;
    }
    let final_profile = angular_density(&modefn, f64::INFINITY)?;
    let mut out = create_file(&join(out_dir, "profile_inf.csv"))?;
    write_angular_profile(&mut out, &final_profile)?;

    let forward = cone_fraction(&final_profile, axis, half_angle)?;
    let backward = cone_fraction(&final_profile, -axis, half_angle)?;

    let dark_survival: f64 = eigen
        .eigenvalues()
        .iter()
        .zip(eigen.mode_coefficients().iter())
        .filter(|(&lam, _)| lam <= DARK_MODE_THRESHOLD)
        .map(|(_, c)| c.norm_sqr())
        .sum();
    let closure_error = (final_profile.total_emitted() + dark_survival - 1.0).abs();

    // Convergence diagnostic: same observable at a doubled rule.
    let doubled = Arc::new(build_angular_grid(
        2 * config.n_polar,
        2 * config.n_azimuth,
    )?);
    let modefn_doubled = mode_projection(sample, eigen, Arc::clone(&doubled));
    let profile_doubled = angular_density(&modefn_doubled, f64::INFINITY)?;
    let forward_doubled = cone_fraction(&profile_doubled, axis, half_angle)?;

    let summary = AngularSummary {
        n_atoms: sample.len(),
        grid_n_polar: config.n_polar,
        grid_n_azimuth: config.n_azimuth,
        cone_axis: [axis.x, axis.y, axis.z],
        cone_half_angle_rad: half_angle,
        cone_fraction: forward,
        backward_cone_fraction: backward,
        total_emitted: final_profile.total_emitted(),
        closure_error,
        dark_mode_count: eigen.len() - modefn.bright_mode_indices().len(),
        doubled_grid_cone_fraction: forward_doubled,
        grid_convergence_delta: (forward - forward_doubled).abs(),
    };
    write_json(&join(out_dir, "angular.json"), &summary)?;
    Ok(summary)
}
