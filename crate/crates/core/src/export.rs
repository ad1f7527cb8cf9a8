//! Plot-ready text exports.
//!
//! All floating-point values use Rust's shortest round-trip formatting, so
//! downstream tools reconstruct bit-identical numbers and repeated runs
//! produce byte-identical files.

use std::io::Write;

use crate::dynamics::AmplitudeState;
use crate::error::Result;
use crate::field::EmissionProfile;
use crate::geometry::SampleGeometry;
use crate::kernel::CouplingKernel;

/// Population trace with the collective-decay exponential as reference:
/// `time_us,population,exponential_reference` where the reference is
/// e^{−2 γ_col t}.
pub fn write_population_trace<W: Write>(
    out: &mut W,
    times: &[f64],
    populations: &[f64],
    gamma_col: f64,
) -> Result<()> {
    assert_eq!(times.len(), populations.len());
    writeln!(out, "time_us,population,exponential_reference")?;
    for (&t, &p) in times.iter().zip(populations) {
        writeln!(out, "{},{},{}", t, p, (-2.0 * gamma_col * t).exp())?;
    }
    Ok(())
}

/// Per-atom populations with positions: `atom_index,x_um,y_um,z_um,population`.
pub fn write_atom_snapshot<W: Write>(
    out: &mut W,
    sample: &SampleGeometry,
    state: &AmplitudeState,
) -> Result<()> {
    assert_eq!(sample.len(), state.beta().len());
    writeln!(out, "atom_index,x_um,y_um,z_um,population")?;
    for (j, (&p, b)) in sample.positions().iter().zip(state.beta()).enumerate() {
        writeln!(out, "{},{},{},{},{}", j, p.x, p.y, p.z, b.norm_sqr())?;
    }
    Ok(())
}

/// Angular emission profile: `theta_rad,phi_rad,weight_sr,density_per_sr`.
pub fn write_angular_profile<W: Write>(out: &mut W, profile: &EmissionProfile) -> Result<()> {
    let grid = profile.grid();
    writeln!(out, "theta_rad,phi_rad,weight_sr,density_per_sr")?;
    for i in 0..grid.len() {
        writeln!(
            out,
            "{},{},{},{}",
            grid.polar_angles()[i],
            grid.azimuth_angles()[i],
            grid.weights()[i],
            profile.density()[i]
        )?;
    }
    Ok(())
}

/// Debugging dump of the kernel matrix, row-major `re im` pairs, one row per
/// line. Not a stable interface.
pub fn write_kernel_matrix<W: Write>(out: &mut W, kernel: &CouplingKernel) -> Result<()> {
    let n = kernel.len();
    writeln!(out, "# coupling kernel, {n} x {n}, row-major re/im pairs")?;
    for j in 0..n {
        let mut line = String::new();
        for jp in 0..n {
            let e = kernel.matrix()[[j, jp]];
            if jp > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{} {}", e.re, e.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
