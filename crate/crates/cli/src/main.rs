use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use collemit_cli::commands;
use collemit_cli::config::{ExperimentConfig, Overrides};

/// Cooperative spontaneous emission from finite atomic lattices: collective
/// rates, excitation dynamics, directional emission, and mode-overlap
/// robustness.
#[derive(Parser)]
#[command(name = "collemit", version)]
struct Cli {
    /// Experiment configuration (TOML); built-in defaults reproduce the
    /// 7x7x20 lattice setup when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Angular grid override as N_POLARxN_AZIMUTH, e.g. 64x64.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,

    /// Seed override for perturbations and sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the coupling kernel and report the collective decay rate.
    Rates {
        /// Also dump the kernel matrix as text (debugging aid).
        #[arg(long)]
        dump_kernel: Option<PathBuf>,
    },
    /// Propagate the excitation: population trace and per-atom snapshots.
    Evolve,
    /// Directional emission profiles, cone fraction, grid-convergence check.
    Angular,
    /// Overlap fidelity between two explicit sample tables.
    Overlap {
        /// Reference sample table.
        sample_a: PathBuf,
        /// Comparison sample table.
        sample_b: PathBuf,
    },
    /// Robustness sweep: overlap vs. random atom removals.
    Sweep,
    /// Full pipeline: rates + evolve + angular + combined summary.
    Run,
}

fn parse_grid(value: &str) -> Result<(usize, usize), String> {
    let (np, na) = value
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected N_POLARxN_AZIMUTH, got `{value}`"))?;
    let np = np
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("bad n_polar: {e}"))?;
    let na = na
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("bad n_azimuth: {e}"))?;
    Ok((np, na))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        out: cli.out,
        grid: cli.grid,
        seed: cli.seed,
    };
    let config = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;

    match cli.command {
        Command::Rates { dump_kernel } => {
            let s = commands::rates_command(&config, dump_kernel.as_deref())?;
            println!(
                "N = {}, gamma_col = {:.6} /us = {:.4} gamma1, symmetric-state residual {:.4}",
                s.n_atoms, s.gamma_col_per_us, s.gamma_col_over_gamma1, s.symmetric_state_residual
            );
        }
        Command::Evolve => {
            let s = commands::evolve_command(&config)?;
            match s.fitted_early_rate_per_us {
                Some(rate) => println!(
                    "N = {}, 2*gamma_fit = {:.4} /us vs 2*gamma_col = {:.4} /us (dev {:.3}%), P(t_end={} us) = {:.3e}",
                    s.n_atoms,
                    rate,
                    2.0 * s.gamma_col_per_us,
                    100.0 * s.fit_relative_deviation.unwrap(),
                    s.final_time_us,
                    s.final_population
                ),
                None => println!(
                    "N = {}, early-decay fit unavailable for this schedule, P(t_end={} us) = {:.3e}",
                    s.n_atoms, s.final_time_us, s.final_population
                ),
            }
        }
        Command::Angular => {
            let s = commands::angular_command(&config)?;
            println!(
                "cone fraction ({} rad, forward) = {:.5}, backward = {:.5}, grid delta = {:.2e}, closure error = {:.2e}",
                s.cone_half_angle_rad,
                s.cone_fraction,
                s.backward_cone_fraction,
                s.grid_convergence_delta,
                s.closure_error
            );
        }
        Command::Overlap { sample_a, sample_b } => {
            let s = commands::overlap_command(&config, &sample_a, &sample_b)?;
            println!(
                "overlap fidelity ({} atoms vs {} atoms) = {:.6}",
                s.n_atoms_a, s.n_atoms_b, s.fidelity
            );
        }
        Command::Sweep => {
            let s = commands::sweep_command(&config)?;
            for a in &s.aggregates {
                println!(
                    "k = {:>3}: {} trials, fidelity min {:.6} mean {:.6} max {:.6}",
                    a.removed_count, a.trials, a.min_fidelity, a.mean_fidelity, a.max_fidelity
                );
            }
        }
        Command::Run => {
            let s = commands::run_command(&config)?;
            println!(
                "N = {}: gamma_col/gamma1 = {:.4}, cone fraction = {:.5} (backward {:.5}), closure error = {:.2e}",
                s.n_atoms,
                s.gamma_col_over_gamma1,
                s.cone_fraction,
                s.backward_cone_fraction,
                s.closure_error
            );
            if let Some(rate) = s.fitted_early_rate_per_us {
                println!(
                    "early decay: 2*gamma_fit = {:.4} /us, 2*gamma_col = {:.4} /us (dev {:.3}%)",
                    rate,
                    2.0 * s.gamma_col_over_gamma1 * s.gamma1_per_us,
                    100.0 * s.fit_relative_deviation.unwrap()
                );
            }
        }
    }
    Ok(())
}
