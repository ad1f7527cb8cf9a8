//! Far-field photon observables.
//!
//! Mode projections A_m(n) = Σ_j e^{i(k₀ − k₀ n)·r_j} V_{jm} map the atomic
//! decay modes onto emission directions; detuning integrals over the photon
//! spectrum are carried out in closed form, so only the angular integral uses
//! quadrature. Spatial phases are evaluated at |k| = k₀ for every direction:
//! the emission bandwidth across the sample extent contributes ~1e-6 rad of
//! phase and is negligible at working precision.
//!
//! The emitted probability density per steradian after time t is
//!
//! ```text
//! density(n, t) = (1/2π) Σ_{m,m'} A_m(n) A*_{m'}(n) c_m c*_{m'}
//!                 · (1 − e^{−γ₁(λ_m+λ_{m'})t}) / (λ_m + λ_{m'})
//! ```
//!
//! with the 1/2π prefactor fixed by unitarity: the angular integral of the
//! density equals 1 − Σ_m |c_m|² e^{−2γ₁λ_m t} exactly, because
//! (1/4π)∮ A_m A*_{m'} dΩ = λ_m δ_{mm'}.

use std::sync::{Arc, OnceLock};

use ndarray::{s, Array1, Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::EigenSystem;
use crate::error::{Error, Result};
use crate::geometry::SampleGeometry;
use crate::quad::gauss_legendre;
use crate::vec3::Vec3;

/// Modes with eigenvalue below this never decay on any relevant timescale;
/// they are excluded from emitted-field sums and counted as survivors.
pub const DARK_MODE_THRESHOLD: f64 = 1e-12;

/// Directions processed per matrix-product block, bounding peak memory.
const DIRECTION_CHUNK: usize = 2048;

/// Product quadrature over the unit sphere: Gauss-Legendre in cos θ times a
/// uniform azimuthal rule. Weights are steradians and sum to 4π.
#[derive(Debug)]
pub struct AngularGrid {
    directions: Vec<Vec3>,
    weights: Vec<f64>,
    polar: Vec<f64>,
    azimuth: Vec<f64>,
    n_polar: usize,
    n_azimuth: usize,
}

pub fn build_angular_grid(n_polar: usize, n_azimuth: usize) -> Result<AngularGrid> {
    if n_polar < 2 || n_azimuth < 2 {
        return Err(Error::invalid(format!(
            "angular grid needs n_polar >= 2 and n_azimuth >= 2, got {n_polar} x {n_azimuth}"
        )));
    }
    let (cos_nodes, cos_weights) = gauss_legendre(n_polar);
    let azimuth_weight = std::f64::consts::TAU / n_azimuth as f64;

    let count = n_polar * n_azimuth;
    let mut directions = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut polar = Vec::with_capacity(count);
    let mut azimuth = Vec::with_capacity(count);
    for (ct, wt) in cos_nodes.iter().zip(&cos_weights) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let theta = ct.acos();
        for ia in 0..n_azimuth {
            let phi = std::f64::consts::TAU * ia as f64 / n_azimuth as f64;
            directions.push(Vec3::new(st * phi.cos(), st * phi.sin(), *ct));
            weights.push(wt * azimuth_weight);
            polar.push(theta);
            azimuth.push(phi);
        }
    }
    Ok(AngularGrid {
        directions,
        weights,
        polar,
        azimuth,
        n_polar,
        n_azimuth,
    })
}

impl AngularGrid {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Polar angles θ per grid point, radians.
    pub fn polar_angles(&self) -> &[f64] {
        &self.polar
    }

    /// Azimuthal angles φ per grid point, radians.
    pub fn azimuth_angles(&self) -> &[f64] {
        &self.azimuth
    }

    pub fn n_polar(&self) -> usize {
        self.n_polar
    }

    pub fn n_azimuth(&self) -> usize {
        self.n_azimuth
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn same_resolution(&self, other: &AngularGrid) -> bool {
        self.n_polar == other.n_polar && self.n_azimuth == other.n_azimuth
    }

    /// Quadrature of a complex integrand over the full sphere.
    pub fn integrate(&self, f: impl Fn(Vec3) -> Complex64) -> Complex64 {
        self.directions
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| f(n) * w)
            .sum()
    }
}

/// Far-field projections of every decay mode on an angular grid, with the
/// spectral data needed to assemble emission observables.
#[derive(Debug)]
pub struct ModeFunction {
    /// Row m holds A_m(n_i) over grid points i.
    projections: Array2<Complex64>,
    eigenvalues: Array1<f64>,
    coefficients: Array1<Complex64>,
    gamma1: f64,
    grid: Arc<AngularGrid>,
    self_inner: OnceLock<f64>,
}

/// Projects the eigenmodes onto the far field: A_m(n_i) = Σ_j
/// e^{i(k₀ − k₀ n_i)·r_j} V_{jm}, evaluated as one dense product of the
/// plane-wave matrix with the eigenvector matrix, blocked over directions.
pub fn mode_projection(
    sample: &SampleGeometry,
    eigen: &EigenSystem,
    grid: Arc<AngularGrid>,
) -> ModeFunction {
    let n = sample.len();
    assert_eq!(n, eigen.len(), "sample and eigensystem dimensions differ");
    let d = grid.len();
    let k0_vector = sample.k0_vector();
    let k0 = sample.k0_magnitude();
    let positions = sample.positions();

    let modes_by_atoms = eigen.eigenvectors().t();
    let mut projections = Array2::zeros((n, d));
    let mut start = 0;
    while start < d {
        let stop = (start + DIRECTION_CHUNK).min(d);
        let width = stop - start;
        let chunk_dirs = &grid.directions()[start..stop];

        let mut phases = vec![Complex64::new(0.0, 0.0); n * width];
        phases
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(j, row)| {
                let r = positions[j];
                let matched = k0_vector.dot(r);
                for (slot, dir) in row.iter_mut().zip(chunk_dirs) {
                    *slot = Complex64::cis(matched - k0 * dir.dot(r));
                }
            });
        let phases = Array2::from_shape_vec((n, width), phases).expect("phase shape");

        projections
            .slice_mut(s![.., start..stop])
            .assign(&modes_by_atoms.dot(&phases));
        start = stop;
    }

    ModeFunction {
        projections,
        eigenvalues: eigen.eigenvalues().clone(),
        coefficients: eigen.mode_coefficients().clone(),
        gamma1: sample.gamma1(),
        grid,
        self_inner: OnceLock::new(),
    }
}

impl ModeFunction {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The M×D projection matrix A_m(n_i).
    pub fn projections(&self) -> &Array2<Complex64> {
        &self.projections
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn coefficients(&self) -> &Array1<Complex64> {
        &self.coefficients
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        &self.grid
    }

    /// Indices of modes that participate in emission (λ above the dark-mode
    /// threshold).
    pub fn bright_mode_indices(&self) -> Vec<usize> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &lam)| lam > DARK_MODE_THRESHOLD)
            .map(|(m, _)| m)
            .collect()
    }
}

/// Emitted-photon probability density over directions, cumulative up to the
/// given time (or t = ∞).
#[derive(Debug)]
pub struct EmissionProfile {
    density: Vec<f64>,
    time: f64,
    total: f64,
    grid: Arc<AngularGrid>,
}

impl EmissionProfile {
    /// Probability per steradian, one value per grid direction.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Time in μs; `f64::INFINITY` for the fully emitted profile.
    pub fn time_us(&self) -> f64 {
        self.time
    }

    /// Total emitted probability Σ_i w_i density_i.
    pub fn total_emitted(&self) -> f64 {
        self.total
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        &self.grid
    }
}

/// (1 − e^{−γ₁ s t}) / s, continuous through s → 0 (limit γ₁ t).
fn decay_overlap_factor(gamma1: f64, s: f64, t: f64) -> f64 {
    let y = gamma1 * s * t;
    if y < 1e-4 {
        gamma1 * t * (1.0 - y / 2.0 + y * y / 6.0 - y * y * y / 24.0)
    } else {
        (1.0 - (-y).exp()) / s
    }
}

/// Cumulative directional emission density at time `time_us` (μs), with
/// `f64::INFINITY` giving the fully emitted profile.
///
/// At t = ∞, dark modes are excluded from emission and remain as survivors;
/// at finite t the kernel factor is regular for every eigenvalue, so the full
/// spectrum participates.
pub fn angular_density(modefn: &ModeFunction, time_us: f64) -> Result<EmissionProfile> {
    if time_us.is_nan() || time_us < 0.0 {
        return Err(Error::invalid(format!(
            "emission time must be >= 0 (or infinity), got {time_us}"
        )));
    }
    let at_infinity = time_us.is_infinite();
    let gamma1 = modefn.gamma1;

    let rows: Vec<usize> = if at_infinity {
        modefn.bright_mode_indices()
    } else {
        (0..modefn.n_modes()).collect()
    };
    let d = modefn.grid.len();

    if rows.is_empty() {
        return Ok(EmissionProfile {
            density: vec![0.0; d],
            time: time_us,
            total: 0.0,
            grid: Arc::clone(&modefn.grid),
        });
    }

    let lam: Vec<f64> = rows.iter().map(|&m| modefn.eigenvalues[m]).collect();
    let coef: Vec<Complex64> = rows.iter().map(|&m| modefn.coefficients[m]).collect();
    let mb = rows.len();

    // H_{mm'} = c_m c̄_{m'} g_{mm'} built exactly Hermitian so the quadratic
    // form below is real up to pure roundoff.
    let mut coupling = Array2::zeros((mb, mb));
    for a in 0..mb {
        for b in a..mb {
            let s_ab = lam[a] + lam[b];
            let g = if at_infinity {
                1.0 / s_ab
            } else {
                decay_overlap_factor(gamma1, s_ab, time_us)
            };
            let h = coef[a] * coef[b].conj() * g;
            coupling[[a, b]] = h;
            coupling[[b, a]] = h.conj();
        }
    }

    let selected = modefn.projections.select(Axis(0), &rows);
    let mut density = vec![0.0; d];
    let mut max_imag = 0.0f64;
    let mut start = 0;
    while start < d {
        let stop = (start + DIRECTION_CHUNK).min(d);
        let chunk = selected.slice(s![.., start..stop]);
        let conjugated = chunk.mapv(|z| z.conj());
        let image = coupling.dot(&conjugated);
        let values = (&chunk * &image).sum_axis(Axis(0));
        for (slot, v) in density[start..stop].iter_mut().zip(values.iter()) {
            max_imag = max_imag.max(v.im.abs());
            *slot = v.re / std::f64::consts::TAU;
        }
        start = stop;
    }
    debug_assert!(max_imag <= 1e-9, "density imaginary residue {max_imag}");

    let total = modefn
        .grid
        .weights()
        .iter()
        .zip(&density)
        .map(|(&w, &rho)| w * rho)
        .sum();

    Ok(EmissionProfile {
        density,
        time: time_us,
        total,
        grid: Arc::clone(&modefn.grid),
    })
}

/// Fraction of the emitted probability within `half_angle` of `axis`.
pub fn cone_fraction(profile: &EmissionProfile, axis: Vec3, half_angle: f64) -> Result<f64> {
    if half_angle.is_nan() || half_angle <= 0.0 || half_angle > std::f64::consts::PI {
        return Err(Error::invalid(format!(
            "cone half-angle must be in (0, pi], got {half_angle}"
        )));
    }
    let axis = axis
        .normalized()
        .ok_or_else(|| Error::invalid("cone axis must be a nonzero finite vector"))?;
    if profile.total.is_nan() || profile.total <= 0.0 {
        return Err(Error::invalid(format!(
            "cone fraction undefined for total emitted probability {}",
            profile.total
        )));
    }
    let grid = profile.grid();
    let mut inside = 0.0;
    for ((&dir, &w), &rho) in grid
        .directions()
        .iter()
        .zip(grid.weights())
        .zip(&profile.density)
    {
        if dir.angle_to(axis) <= half_angle {
            inside += w * rho;
        }
    }
    Ok(inside / profile.total)
}

/// Spectral-angular inner product ⟨E_a, E_b⟩ of the fully emitted fields:
/// Σ_i w_i Σ_{m,m'} A^a_m(n_i)* A^b_{m'}(n_i) c^a_m* c^b_{m'}
/// · 2π / (γ₁ (λ^a_m + λ^b_{m'})), restricted to bright modes.
fn spectral_inner(
    a: &ModeFunction,
    rows_a: &[usize],
    b: &ModeFunction,
    rows_b: &[usize],
) -> Complex64 {
    let weights = a.grid.weights();

    // Weighted conjugate of A^a restricted to bright rows.
    let mut weighted = a.projections.select(Axis(0), rows_a).mapv(|z| z.conj());
    for (i, mut col) in weighted.axis_iter_mut(Axis(1)).enumerate() {
        let w = Complex64::new(weights[i], 0.0);
        col.map_inplace(|z| *z *= w);
    }
    let gram = weighted.dot(&b.projections.select(Axis(0), rows_b).t());

    let mut inner = Complex64::new(0.0, 0.0);
    for (ia, &ma) in rows_a.iter().enumerate() {
        let ca = a.coefficients[ma].conj();
        let la = a.eigenvalues[ma];
        for (ib, &mb) in rows_b.iter().enumerate() {
            let cb = b.coefficients[mb];
            let lb = b.eigenvalues[mb];
            inner += ca * cb * gram[[ia, ib]] / (la + lb);
        }
    }
    inner * Complex64::new(std::f64::consts::TAU / a.gamma1, 0.0)
}

fn self_inner(modefn: &ModeFunction, rows: &[usize]) -> f64 {
    *modefn
        .self_inner
        .get_or_init(|| spectral_inner(modefn, rows, modefn, rows).re)
}

/// Overlap fidelity |⟨E_a,E_b⟩|² / (⟨E_a,E_a⟩⟨E_b,E_b⟩) of the field modes
/// emitted by two samples, evaluated on a shared angular grid.
pub fn mode_overlap(a: &ModeFunction, b: &ModeFunction) -> Result<f64> {
    if !a.grid.same_resolution(&b.grid) {
        return Err(Error::invalid(format!(
            "mode functions live on different grids ({}x{} vs {}x{})",
            a.grid.n_polar(),
            a.grid.n_azimuth(),
            b.grid.n_polar(),
            b.grid.n_azimuth()
        )));
    }
    if a.gamma1 != b.gamma1 {
        return Err(Error::invalid(format!(
            "mode functions have different gamma1 ({} vs {})",
            a.gamma1, b.gamma1
        )));
    }
    let rows_a = a.bright_mode_indices();
    let rows_b = b.bright_mode_indices();
    if rows_a.is_empty() || rows_b.is_empty() {
        return Err(Error::invalid(
            "mode overlap undefined: a spectrum contains no bright modes",
        ));
    }

    let cross = spectral_inner(a, &rows_a, b, &rows_b);
    let norm_a = self_inner(a, &rows_a);
    let norm_b = self_inner(b, &rows_b);
    assert!(
        norm_a > 0.0 && norm_b > 0.0,
        "self-overlaps must be positive"
    );
    Ok(cross.norm_sqr() / (norm_a * norm_b))
}
