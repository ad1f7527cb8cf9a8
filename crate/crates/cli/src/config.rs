//! Experiment configuration: a single TOML file; the built-in defaults
//! describe the 7×7×20 reference lattice.
//!
//! Unknown keys are rejected so typos in physics parameters cannot pass
//! silently, and every invalid value produces an error naming the field.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::Deserialize;

use collemit::{PerturbationSpec, PhysicalParams, SampleGeometry, Vec3};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "default_dims")]
    pub dims: [usize; 3],
    #[serde(default = "default_spacing")]
    pub spacing_um: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default = "default_wavelength")]
    pub wavelength_um: f64,
    #[serde(default = "default_gamma1")]
    pub gamma1_per_us: f64,
    /// Defaults to the longest lattice axis when omitted.
    #[serde(default)]
    pub k0_direction: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_grid_side")]
    pub n_polar: usize,
    #[serde(default = "default_grid_side")]
    pub n_azimuth: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    /// Explicit times in μs; overrides the log-spaced rule when present.
    #[serde(default)]
    pub values_us: Option<Vec<f64>>,
    #[serde(default = "default_log_start")]
    pub log_start_us: f64,
    #[serde(default = "default_log_stop")]
    pub log_stop_us: f64,
    #[serde(default = "default_log_count")]
    pub log_count: usize,
    /// Times at which angular profiles are requested (t = ∞ is always added).
    #[serde(default = "default_profile_times")]
    pub profile_times_us: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default)]
    pub removal_indices: Option<Vec<usize>>,
    #[serde(default)]
    pub removal_count: Option<usize>,
    #[serde(default)]
    pub jitter_sigma_um: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_sweep_counts")]
    pub removal_counts: Vec<usize>,
    #[serde(default = "default_sweep_seeds")]
    pub seeds_per_count: usize,
    #[serde(default = "default_sweep_base_seed")]
    pub base_seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_cone_half_angle")]
    pub cone_half_angle_rad: f64,
}

fn default_dims() -> [usize; 3] {
    [7, 7, 20]
}
fn default_spacing() -> f64 {
    0.37
}
fn default_wavelength() -> f64 {
    collemit::geometry::DEFAULT_WAVELENGTH_UM
}
fn default_gamma1() -> f64 {
    collemit::geometry::DEFAULT_GAMMA1_PER_US
}
fn default_grid_side() -> usize {
    64
}
fn default_log_start() -> f64 {
    1e-4
}
fn default_log_stop() -> f64 {
    0.2
}
fn default_log_count() -> usize {
    200
}
fn default_profile_times() -> Vec<f64> {
    vec![0.1]
}
fn default_seed() -> u64 {
    1
}
fn default_sweep_counts() -> Vec<usize> {
    vec![1, 5, 10, 20, 30]
}
fn default_sweep_seeds() -> usize {
    20
}
fn default_sweep_base_seed() -> u64 {
    1000
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_cone_half_angle() -> f64 {
    0.3
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection {
            dims: default_dims(),
            spacing_um: default_spacing(),
        }
    }
}
impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection {
            wavelength_um: default_wavelength(),
            gamma1_per_us: default_gamma1(),
            k0_direction: None,
        }
    }
}
impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n_polar: default_grid_side(),
            n_azimuth: default_grid_side(),
        }
    }
}
impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            values_us: None,
            log_start_us: default_log_start(),
            log_stop_us: default_log_stop(),
            log_count: default_log_count(),
            profile_times_us: default_profile_times(),
        }
    }
}
impl Default for PerturbationSection {
    fn default() -> Self {
        PerturbationSection {
            removal_indices: None,
            removal_count: None,
            jitter_sigma_um: 0.0,
            seed: default_seed(),
        }
    }
}
impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            removal_counts: default_sweep_counts(),
            seeds_per_count: default_sweep_seeds(),
            base_seed: default_sweep_base_seed(),
        }
    }
}
impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_out_dir(),
            cone_half_angle_rad: default_cone_half_angle(),
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<(usize, usize)>,
    /// Replaces both the perturbation seed and the sweep base seed.
    pub seed: Option<u64>,
}

/// Fully validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dims: [usize; 3],
    pub spacing_um: f64,
    pub wavelength_um: f64,
    pub gamma1_per_us: f64,
    pub k0_direction: Option<Vec3>,
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub schedule: Vec<f64>,
    pub profile_times_us: Vec<f64>,
    pub perturbation: PerturbationSpec,
    pub sweep_removal_counts: Vec<usize>,
    pub sweep_seeds_per_count: usize,
    pub sweep_base_seed: u64,
    pub output_dir: PathBuf,
    pub cone_half_angle_rad: f64,
}

fn field_err(field: &str, reason: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("config field `{field}`: {reason}")
}

impl ExperimentConfig {
    /// Loads and validates a config file; `None` uses the built-in
    /// reference defaults.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let raw = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config file {}", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("invalid config file {}", p.display()))?
            }
            None => RawConfig::default(),
        };
        Self::from_raw(raw, overrides)
    }

    pub fn from_raw(raw: RawConfig, overrides: &Overrides) -> Result<Self> {
        for (axis, &d) in ["x", "y", "z"].iter().zip(&raw.lattice.dims) {
            if d == 0 {
                return Err(field_err(
                    "lattice.dims",
                    format!("{axis} extent must be >= 1"),
                ));
            }
        }
        if !raw.lattice.spacing_um.is_finite() || raw.lattice.spacing_um <= 0.0 {
            return Err(field_err(
                "lattice.spacing_um",
                "must be positive and finite",
            ));
        }
        if !raw.physics.wavelength_um.is_finite() || raw.physics.wavelength_um <= 0.0 {
            return Err(field_err(
                "physics.wavelength_um",
                "must be positive and finite",
            ));
        }
        if !raw.physics.gamma1_per_us.is_finite() || raw.physics.gamma1_per_us <= 0.0 {
            return Err(field_err(
                "physics.gamma1_per_us",
                "must be positive and finite",
            ));
        }
        let k0_direction = match raw.physics.k0_direction {
            Some([x, y, z]) => Some(Vec3::new(x, y, z).normalized().ok_or_else(|| {
                field_err("physics.k0_direction", "must be a nonzero finite vector")
            })?),
            None => None,
        };

        let (mut n_polar, mut n_azimuth) = (raw.grid.n_polar, raw.grid.n_azimuth);
        if let Some((np, na)) = overrides.grid {
            n_polar = np;
            n_azimuth = na;
        }
        if n_polar < 2 {
            return Err(field_err("grid.n_polar", "must be >= 2"));
        }
        if n_azimuth < 2 {
            return Err(field_err("grid.n_azimuth", "must be >= 2"));
        }

        let schedule = match &raw.schedule.values_us {
            Some(values) => {
                if values.is_empty() {
                    return Err(field_err("schedule.values_us", "must not be empty"));
                }
                if values.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(field_err(
                        "schedule.values_us",
                        "times must be finite and >= 0",
                    ));
                }
                if values.windows(2).any(|w| w[0] > w[1]) {
                    return Err(field_err(
                        "schedule.values_us",
                        "times must be sorted ascending",
                    ));
                }
                values.clone()
            }
            None => {
                let s = &raw.schedule;
                if !s.log_start_us.is_finite() || s.log_start_us <= 0.0 {
                    return Err(field_err(
                        "schedule.log_start_us",
                        "must be positive and finite",
                    ));
                }
                if !s.log_stop_us.is_finite() || s.log_stop_us <= s.log_start_us {
                    return Err(field_err(
                        "schedule.log_stop_us",
                        "must exceed log_start_us",
                    ));
                }
                if s.log_count < 2 {
                    return Err(field_err("schedule.log_count", "must be >= 2"));
                }
                log_spaced(s.log_start_us, s.log_stop_us, s.log_count)
            }
        };
        if raw
            .schedule
            .profile_times_us
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(field_err(
                "schedule.profile_times_us",
                "times must be finite and >= 0",
            ));
        }

        let perturbation = PerturbationSpec {
            removal_indices: raw.perturbation.removal_indices.clone(),
            removal_count: raw.perturbation.removal_count,
            jitter_sigma_um: raw.perturbation.jitter_sigma_um,
            seed: overrides.seed.unwrap_or(raw.perturbation.seed),
        };
        if let Err(e) = perturbation.validate() {
            return Err(field_err("perturbation", e));
        }

        if raw.sweep.seeds_per_count == 0 {
            return Err(field_err("sweep.seeds_per_count", "must be >= 1"));
        }
        let n_atoms = raw.lattice.dims.iter().product::<usize>();
        if let Some(&bad) = raw.sweep.removal_counts.iter().find(|&&k| k >= n_atoms) {
            return Err(field_err(
                "sweep.removal_counts",
                format!("removal count {bad} must be smaller than the sample size {n_atoms}"),
            ));
        }

        let cone = raw.output.cone_half_angle_rad;
        if cone.is_nan() || cone <= 0.0 || cone > std::f64::consts::PI {
            return Err(field_err(
                "output.cone_half_angle_rad",
                "must be in (0, pi]",
            ));
        }

        Ok(ExperimentConfig {
            dims: raw.lattice.dims,
            spacing_um: raw.lattice.spacing_um,
            wavelength_um: raw.physics.wavelength_um,
            gamma1_per_us: raw.physics.gamma1_per_us,
            k0_direction,
            n_polar,
            n_azimuth,
            schedule,
            profile_times_us: raw.schedule.profile_times_us.clone(),
            perturbation,
            sweep_removal_counts: raw.sweep.removal_counts.clone(),
            sweep_seeds_per_count: raw.sweep.seeds_per_count,
            sweep_base_seed: overrides.seed.unwrap_or(raw.sweep.base_seed),
            output_dir: overrides.out.clone().unwrap_or(raw.output.directory),
            cone_half_angle_rad: raw.output.cone_half_angle_rad,
        })
    }

    pub fn physical_params(&self) -> PhysicalParams {
        PhysicalParams {
            wavelength_um: self.wavelength_um,
            gamma1_per_us: self.gamma1_per_us,
            k0_direction: self.k0_direction,
        }
    }

    /// The unperturbed lattice.
    pub fn base_sample(&self) -> Result<SampleGeometry> {
        collemit::build_lattice(self.dims, self.spacing_um, &self.physical_params())
            .map_err(|e| anyhow!("lattice construction failed: {e}"))
    }

    /// The lattice with the configured perturbation applied.
    pub fn experiment_sample(&self) -> Result<SampleGeometry> {
        let base = self.base_sample()?;
        collemit::apply_perturbation(&base, &self.perturbation)
            .map_err(|e| anyhow!("perturbation failed: {e}"))
    }

    /// Deterministic seed for sweep trial `index` at removal count `k`.
    pub fn sweep_trial_seed(&self, k: usize, index: usize) -> u64 {
        self.sweep_base_seed + 1000 * k as u64 + index as u64
    }
}

/// `count` log-spaced values from `start` to `stop` inclusive.
pub fn log_spaced(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let ratio = (stop / start).powf(1.0 / (count - 1) as f64);
    let mut times = Vec::with_capacity(count);
    let mut t = start;
    for _ in 0..count {
        times.push(t);
        t *= ratio;
    }
    // Pin the endpoint; cumulative products drift in the last few ulps.
    *times.last_mut().unwrap() = stop;
    times
}
