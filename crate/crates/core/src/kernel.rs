//! Pairwise decay coupling kernel and the collective decay rate.
//!
//! The kernel entry for separation r is sinc(k₀|r|)·e^{−i k₀·r}: the angular
//! average of plane-wave interference between two emitters, which makes the
//! assembled matrix a Gram matrix of plane waves over the direction sphere —
//! Hermitian and positive semi-definite with unit diagonal. Only the
//! dissipative part appears; coherent dipole-dipole level shifts are omitted.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::SampleGeometry;
use crate::vec3::Vec3;

/// sin(x)/x with a Taylor branch below 1e-4 to avoid cancellation at small
/// separations; sinc(0) = 1 exactly.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Coupling between two emitters separated by `r` (μm) for the phase-matching
/// wavevector `k0_vector` (rad/μm): sinc(k₀|r|)·e^{−i k₀·r}.
///
/// The r → 0 limit returns exactly 1.
pub fn coupling_entry(r: Vec3, k0_vector: Vec3) -> Complex64 {
    let separation = r.norm();
    if separation == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let k0 = k0_vector.norm();
    Complex64::from_polar(sinc(k0 * separation), -k0_vector.dot(r))
}

/// The N×N coupling matrix F together with the sample it was built from.
#[derive(Debug, Clone)]
pub struct CouplingKernel {
    matrix: Array2<Complex64>,
    sample: SampleGeometry,
}

impl CouplingKernel {
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn sample(&self) -> &SampleGeometry {
        &self.sample
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    /// Gershgorin bound on the largest eigenvalue: max row sum of |F|.
    pub fn gershgorin_bound(&self) -> f64 {
        let n = self.len();
        let mut bound = 0.0f64;
        for j in 0..n {
            let mut row = 0.0;
            for jp in 0..n {
                row += self.matrix[[j, jp]].norm();
            }
            bound = bound.max(row);
        }
        bound
    }
}

/// Assembles F[j][j'] = coupling_entry(r_j − r_j', k₀) for the whole sample.
///
/// The upper triangle is computed (rows in parallel) and mirrored, so the
/// result is Hermitian to the last bit. Coincident atoms yield entries of
/// exactly 1 and are reported with a warning.
pub fn build_kernel(sample: &SampleGeometry) -> CouplingKernel {
    let n = sample.len();
    let k0_vector = sample.k0_vector();
    let positions = sample.positions();

    if sample.has_coincident_positions() {
        log::warn!("building kernel for a sample with coincident atom positions");
    }

    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        row[j] = Complex64::new(1.0, 0.0);
        for jp in (j + 1)..n {
            row[jp] = coupling_entry(positions[j] - positions[jp], k0_vector);
        }
    });
    for j in 0..n {
        for jp in 0..j {
            data[j * n + jp] = data[jp * n + j].conj();
        }
    }

    let matrix = Array2::from_shape_vec((n, n), data).expect("kernel shape");
    CouplingKernel {
        matrix,
        sample: sample.clone(),
    }
}

/// Collective decay rate of the phase-matched symmetric state, μs⁻¹:
/// γ_col = (γ₁/N)·Σ_{j,j'} F_{jj'}.
///
/// The double sum is real for a Hermitian kernel; its imaginary roundoff
/// residue is checked against 1e-10·N before being discarded.
pub fn collective_rate(kernel: &CouplingKernel) -> f64 {
    let n = kernel.len();
    let sum: Complex64 = kernel.matrix().iter().sum();
    assert!(
        sum.im.abs() <= 1e-10 * n as f64,
        "kernel sum has non-negligible imaginary part {}",
        sum.im
    );
    kernel.sample().gamma1() * sum.re / n as f64
}

/// Residual ‖F β₀ − (γ_col/γ₁) β₀‖ of the uniform state against the kernel;
/// zero exactly when the symmetric state is an eigenvector.
pub fn symmetric_state_residual(kernel: &CouplingKernel) -> f64 {
    let n = kernel.len();
    let beta0 = Array1::from_elem(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    let image = kernel.matrix().dot(&beta0);
    let ratio = collective_rate(kernel) / kernel.sample().gamma1();
    let mut residual_sq = 0.0;
    for (v, b) in image.iter().zip(beta0.iter()) {
        residual_sq += (v - b * ratio).norm_sqr();
    }
    residual_sq.sqrt()
}

/// Convenience check used by tests and diagnostics: max |F − F†| entry.
pub fn hermiticity_defect(kernel: &CouplingKernel) -> f64 {
    let m = kernel.matrix();
    let n = kernel.len();
    let mut defect = 0.0f64;
    for j in 0..n {
        for jp in 0..n {
            defect = defect.max((m[[j, jp]] - m[[jp, j]].conj()).norm());
        }
    }
    defect
}
