//! Sample geometries: lattice construction, perturbations (atom removal and
//! positional jitter), physical constants, and the plain-text sample table.
//!
//! All types are immutable after construction; perturbation operations return
//! new samples and are deterministic functions of their seed (see [`crate::rng`]
//! for the fixed generator conventions).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::rng;
use crate::vec3::Vec3;

/// Default transition wavelength in micrometers (Rb D1 line, 5S₁/₂ → 5P₁/₂).
pub const DEFAULT_WAVELENGTH_UM: f64 = 0.795;

/// Alternate wavelength for cross-checks (Rb D2 line, 5S₁/₂ → 5P₃/₂).
pub const D2_WAVELENGTH_UM: f64 = 0.780;

/// Default amplitude decay rate γ₁ in μs⁻¹; the excited-state population
/// decays at 2γ₁ = 37 μs⁻¹.
pub const DEFAULT_GAMMA1_PER_US: f64 = 18.5;

/// An atomic sample: positions plus the physical constants every downstream
/// computation derives from.
///
/// Units: positions in μm, `k0_magnitude` in rad/μm (= 2π/wavelength),
/// `gamma1` in μs⁻¹ (half the excited-state population decay rate).
#[derive(Debug, Clone)]
pub struct SampleGeometry {
    positions: Vec<Vec3>,
    k0_magnitude: f64,
    k0_direction: Vec3,
    gamma1: f64,
}

impl SampleGeometry {
    /// Validates scalars and the direction norm. Coincident positions are
    /// permitted (they violate the nominal geometry invariant but keep the
    /// coupling kernel well defined) and are reported with a warning.
    pub fn new(
        positions: Vec<Vec3>,
        k0_magnitude: f64,
        k0_direction: Vec3,
        gamma1: f64,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("sample must contain at least one atom"));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("atom positions must be finite"));
        }
        if !k0_magnitude.is_finite() || k0_magnitude <= 0.0 {
            return Err(Error::invalid(format!(
                "k0_magnitude must be positive and finite, got {k0_magnitude}"
            )));
        }
        if !gamma1.is_finite() || gamma1 <= 0.0 {
            return Err(Error::invalid(format!(
                "gamma1 must be positive and finite, got {gamma1}"
            )));
        }
        if !k0_direction.is_finite() || (k0_direction.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "k0_direction must be a unit vector within 1e-12, got norm {}",
                k0_direction.norm()
            )));
        }
        let sample = SampleGeometry {
            positions,
            k0_magnitude,
            k0_direction,
            gamma1,
        };
        if sample.has_coincident_positions() {
            log::warn!("sample contains coincident atom positions");
        }
        Ok(sample)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, index: usize) -> Vec3 {
        self.positions[index]
    }

    pub fn k0_magnitude(&self) -> f64 {
        self.k0_magnitude
    }

    pub fn k0_direction(&self) -> Vec3 {
        self.k0_direction
    }

    /// The phase-matching wavevector k₀ = k0_magnitude · k0_direction, rad/μm.
    pub fn k0_vector(&self) -> Vec3 {
        self.k0_direction * self.k0_magnitude
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn has_coincident_positions(&self) -> bool {
        let n = self.positions.len();
        for j in 0..n {
            for jp in (j + 1)..n {
                if (self.positions[j] - self.positions[jp]).norm_squared() == 0.0 {
                    return true;
                }
            }
        }
        false
    }

    pub fn max_pairwise_distance(&self) -> f64 {
        let mut max_sq = 0.0f64;
        for (j, &pj) in self.positions.iter().enumerate() {
            for &pk in &self.positions[j + 1..] {
                max_sq = max_sq.max((pj - pk).norm_squared());
            }
        }
        max_sq.sqrt()
    }
}

/// Physical constants for lattice construction.
#[derive(Debug, Clone)]
pub struct PhysicalParams {
    pub wavelength_um: f64,
    pub gamma1_per_us: f64,
    /// Direction of the phase-matching wavevector. `None` selects the longest
    /// lattice axis (ties resolved toward z). Normalized internally.
    pub k0_direction: Option<Vec3>,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            wavelength_um: DEFAULT_WAVELENGTH_UM,
            gamma1_per_us: DEFAULT_GAMMA1_PER_US,
            k0_direction: None,
        }
    }
}

/// A perturbation applied to an existing sample.
///
/// At most one of `removal_indices` / `removal_count` may be set. All random
/// draws are deterministic in `seed`.
#[derive(Debug, Clone, Default)]
pub struct PerturbationSpec {
    pub removal_indices: Option<Vec<usize>>,
    pub removal_count: Option<usize>,
    pub jitter_sigma_um: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.removal_indices.is_some() && self.removal_count.is_some() {
            return Err(Error::invalid(
                "at most one of removal_indices / removal_count may be set",
            ));
        }
        if !self.jitter_sigma_um.is_finite() || self.jitter_sigma_um < 0.0 {
            return Err(Error::invalid(format!(
                "jitter_sigma_um must be finite and >= 0, got {}",
                self.jitter_sigma_um
            )));
        }
        Ok(())
    }
}

/// Builds a cubic lattice of `dims = [nx, ny, nz]` atoms with the given
/// spacing, centered on the origin.
///
/// The phase-matching wavevector defaults to the longest lattice axis.
pub fn build_lattice(
    dims: [usize; 3],
    spacing_um: f64,
    params: &PhysicalParams,
) -> Result<SampleGeometry> {
    for (axis, &d) in ["x", "y", "z"].iter().zip(&dims) {
        if d == 0 {
            return Err(Error::invalid(format!("lattice dims.{axis} must be >= 1")));
        }
    }
    if !spacing_um.is_finite() || spacing_um <= 0.0 {
        return Err(Error::invalid(format!(
            "lattice spacing must be positive and finite, got {spacing_um}"
        )));
    }
    if !params.wavelength_um.is_finite() || params.wavelength_um <= 0.0 {
        return Err(Error::invalid(format!(
            "wavelength must be positive and finite, got {}",
            params.wavelength_um
        )));
    }

    let [nx, ny, nz] = dims;
    let center = Vec3::new(
        (nx - 1) as f64 / 2.0,
        (ny - 1) as f64 / 2.0,
        (nz - 1) as f64 / 2.0,
    );
    let mut positions = Vec::with_capacity(nx * ny * nz);
    for ix in 0..nx {
        for iy in 0..ny {
            for iz in 0..nz {
                let idx = Vec3::new(ix as f64, iy as f64, iz as f64);
                positions.push((idx - center) * spacing_um);
            }
        }
    }

    let direction = match params.k0_direction {
        Some(v) => v
            .normalized()
            .ok_or_else(|| Error::invalid("k0_direction must be a nonzero finite vector"))?,
        None => {
            // Longest axis wins; ties resolve toward the later axis so a cube
            // still gets a definite direction.
            if nx > ny && nx > nz {
                Vec3::X
            } else if ny > nz {
                Vec3::Y
            } else {
                Vec3::Z
            }
        }
    };

    let k0_magnitude = std::f64::consts::TAU / params.wavelength_um;
    SampleGeometry::new(positions, k0_magnitude, direction, params.gamma1_per_us)
}

/// Removes atoms selected by the perturbation spec, preserving the order of
/// the remaining atoms and all physical constants.
pub fn remove_atoms(sample: &SampleGeometry, spec: &PerturbationSpec) -> Result<SampleGeometry> {
    spec.validate()?;
    let n = sample.len();

    let removed: Vec<usize> = match (&spec.removal_indices, spec.removal_count) {
        (Some(indices), None) => {
            let mut sorted = indices.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid("removal_indices contains duplicates"));
            }
            if let Some(&bad) = sorted.iter().find(|&&i| i >= n) {
                return Err(Error::invalid(format!(
                    "removal index {bad} out of range for sample of {n} atoms"
                )));
            }
            if sorted.len() >= n {
                return Err(Error::invalid("removal would leave an empty sample"));
            }
            sorted
        }
        (None, Some(count)) => {
            if count >= n {
                return Err(Error::invalid(format!(
                    "removal_count {count} must be smaller than the sample size {n}"
                )));
            }
            rng::sample_indices(&mut rng::seeded(spec.seed), n, count)
        }
        (None, None) => Vec::new(),
        (Some(_), Some(_)) => unreachable!("rejected by validate"),
    };

    if removed.is_empty() {
        return Ok(sample.clone());
    }

    let mut keep = Vec::with_capacity(n - removed.len());
    let mut next_removed = removed.iter().copied().peekable();
    for (j, &p) in sample.positions().iter().enumerate() {
        if next_removed.peek() == Some(&j) {
            next_removed.next();
        } else {
            keep.push(p);
        }
    }
    SampleGeometry::new(
        keep,
        sample.k0_magnitude,
        sample.k0_direction,
        sample.gamma1,
    )
}

/// Displaces every coordinate by an independent zero-mean Gaussian draw of
/// standard deviation `sigma_um`. Draw order is per atom, x then y then z.
pub fn jitter_positions(
    sample: &SampleGeometry,
    sigma_um: f64,
    seed: u64,
) -> Result<SampleGeometry> {
    if !sigma_um.is_finite() || sigma_um < 0.0 {
        return Err(Error::invalid(format!(
            "jitter sigma must be finite and >= 0, got {sigma_um}"
        )));
    }
    if sigma_um == 0.0 {
        return Ok(sample.clone());
    }
    let mut gen = rng::seeded(seed);
    let positions = sample
        .positions()
        .iter()
        .map(|&p| {
            let dx = rng::standard_normal(&mut gen);
            let dy = rng::standard_normal(&mut gen);
            let dz = rng::standard_normal(&mut gen);
            p + Vec3::new(dx, dy, dz) * sigma_um
        })
        .collect();
    SampleGeometry::new(
        positions,
        sample.k0_magnitude,
        sample.k0_direction,
        sample.gamma1,
    )
}

/// Removal followed by jitter. The jitter stream is decoupled from the
/// removal stream by XOR-ing the seed with the golden-ratio constant.
pub fn apply_perturbation(
    sample: &SampleGeometry,
    spec: &PerturbationSpec,
) -> Result<SampleGeometry> {
    let removed = remove_atoms(sample, spec)?;
    jitter_positions(
        &removed,
        spec.jitter_sigma_um,
        spec.seed ^ 0x9E37_79B9_7F4A_7C15,
    )
}

/// Writes the sample as a text table: header lines carry the k₀ components
/// (rad/μm) and γ₁ (μs⁻¹), then one atom per line with three coordinates in
/// μm. Values use shortest round-trip formatting.
pub fn write_sample<W: Write>(sample: &SampleGeometry, out: &mut W) -> Result<()> {
    let k = sample.k0_vector();
    writeln!(out, "# collemit sample table")?;
    writeln!(out, "# k0_rad_per_um {} {} {}", k.x, k.y, k.z)?;
    writeln!(out, "# gamma1_per_us {}", sample.gamma1())?;
    for p in sample.positions() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

/// Parses the text table written by [`write_sample`].
pub fn read_sample<R: BufRead>(input: R) -> Result<SampleGeometry> {
    let mut k0_vector: Option<Vec3> = None;
    let mut gamma1: Option<f64> = None;
    let mut positions = Vec::new();

    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        let human = lineno + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut tokens = rest.split_whitespace();
            match tokens.next() {
                Some("k0_rad_per_um") => {
                    let v = parse_floats::<3>(tokens, "k0_rad_per_um", human)?;
                    k0_vector = Some(Vec3::new(v[0], v[1], v[2]));
                }
                Some("gamma1_per_us") => {
                    let v = parse_floats::<1>(tokens, "gamma1_per_us", human)?;
                    gamma1 = Some(v[0]);
                }
                _ => {} // comment
            }
            continue;
        }
        let v = parse_floats::<3>(line.split_whitespace(), "atom position", human)?;
        positions.push(Vec3::new(v[0], v[1], v[2]));
    }

    let k = k0_vector.ok_or_else(|| Error::malformed("missing `# k0_rad_per_um` header"))?;
    let gamma1 = gamma1.ok_or_else(|| Error::malformed("missing `# gamma1_per_us` header"))?;
    let magnitude = k.norm();
    let direction = k
        .normalized()
        .ok_or_else(|| Error::malformed("k0 vector must be nonzero and finite"))?;
    SampleGeometry::new(positions, magnitude, direction, gamma1)
}

pub fn save_sample(sample: &SampleGeometry, path: &std::path::Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_sample(sample, &mut file)
}

pub fn load_sample(path: &std::path::Path) -> Result<SampleGeometry> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_sample(file)
}

fn parse_floats<'a, const K: usize>(
    tokens: impl Iterator<Item = &'a str>,
    what: &str,
    lineno: usize,
) -> Result<[f64; K]> {
    let mut out = [0.0; K];
    let mut count = 0;
    for tok in tokens {
        if count == K {
            return Err(Error::malformed(format!(
                "line {lineno}: expected {K} values for {what}, found more"
            )));
        }
        out[count] = tok.parse::<f64>().map_err(|_| {
            Error::malformed(format!("line {lineno}: cannot parse `{tok}` in {what}"))
        })?;
        count += 1;
    }
    if count != K {
        return Err(Error::malformed(format!(
            "line {lineno}: expected {K} values for {what}, found {count}"
        )));
    }
    Ok(out)
}
