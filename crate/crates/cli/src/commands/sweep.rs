//! `sweep`: overlap fidelity of the full sample against random-removal
//! variants, over a grid of removal counts and seeds.
//!
//! Trials run concurrently; per-trial determinism comes from the derived
//! seed (base + 1000·k + trial index), and records are sorted before writing
//! so output bytes never depend on scheduling.

use std::sync::Arc;

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use serde::Serialize;

use collemit::{
    build_angular_grid, build_kernel, diagonalize, mode_overlap, mode_projection, remove_atoms,
    PerturbationSpec,
};

use crate::config::ExperimentConfig;

use super::{ensure_dir, join, write_json};

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub removed_count: usize,
    pub fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepAggregate {
    pub removed_count: usize,
    pub trials: usize,
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    pub max_fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub n_atoms: usize,
    pub grid_n_polar: usize,
    pub grid_n_azimuth: usize,
    pub seeds_per_count: usize,
    pub aggregates: Vec<SweepAggregate>,
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
}

pub fn sweep_command(config: &ExperimentConfig) -> Result<SweepOutcome> {
    let base = config.base_sample()?;
    let n = base.len();
    if let Some(&bad) = config.sweep_removal_counts.iter().find(|&&k| k >= n) {
        return Err(anyhow!(
            "config field `sweep.removal_counts`: removal count {bad} must be smaller than the sample size {n}"
        ));
    }

    let grid = Arc::new(build_angular_grid(config.n_polar, config.n_azimuth)?);
    let reference = mode_projection(
        &base,
        &diagonalize(&build_kernel(&base))?,
        Arc::clone(&grid),
    );

    let jobs: Vec<(usize, usize)> = config
        .sweep_removal_counts
        .iter()
        .flat_map(|&k| (0..config.sweep_seeds_per_count).map(move |i| (k, i)))
        .collect();

    let mut trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(k, i)| -> Result<TrialRecord> {
            let seed = config.sweep_trial_seed(k, i);
            let spec = PerturbationSpec {
                removal_count: Some(k),
                seed,
                ..Default::default()
            };
            let perturbed = remove_atoms(&base, &spec)?;
            let eigen = diagonalize(&build_kernel(&perturbed))?;
            let modefn = mode_projection(&perturbed, &eigen, Arc::clone(&grid));
            let fidelity = mode_overlap(&reference, &modefn)?;
            Ok(TrialRecord {
                seed,
                removed_count: k,
                fidelity,
            })
        })
        .collect::<Result<_>>()?;
    trials.sort_by_key(|t| (t.removed_count, t.seed));

    let aggregates = config
        .sweep_removal_counts
        .iter()
        .map(|&k| {
            let fids: Vec<f64> = trials
                .iter()
                .filter(|t| t.removed_count == k)
                .map(|t| t.fidelity)
                .collect();
            SweepAggregate {
                removed_count: k,
                trials: fids.len(),
                min_fidelity: fids.iter().copied().fold(f64::INFINITY, f64::min),
                mean_fidelity: fids.iter().sum::<f64>() / fids.len() as f64,
                max_fidelity: fids.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();

    let outcome = SweepOutcome {
        n_atoms: n,
        grid_n_polar: config.n_polar,
        grid_n_azimuth: config.n_azimuth,
        seeds_per_count: config.sweep_seeds_per_count,
        aggregates,
        trials,
    };

    ensure_dir(&config.output_dir)?;
    write_json(
        &join(&config.output_dir, "sweep_trials.json"),
        &outcome.trials,
    )?;
    write_json(&join(&config.output_dir, "sweep_summary.json"), &outcome)?;
    Ok(outcome)
}
