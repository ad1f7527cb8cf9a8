//! Simulation of cooperative spontaneous emission from a finite lattice of
//! two-level emitters.
//!
//! The crate builds the pairwise decay coupling kernel for a prepared
//! single-excitation sample, diagonalizes it into collective decay modes,
//! propagates the excitation amplitudes in closed form, and derives far-field
//! photon observables (directional emission profiles, emission-cone fractions,
//! and mode-overlap fidelities between perturbed samples).
//!
//! Pipeline: [`geometry`] → [`kernel`] → [`dynamics`] → [`field`], with
//! plot-ready text output in [`export`].

pub mod dynamics;
pub mod error;
pub mod export;
pub mod field;
pub mod geometry;
pub mod kernel;
pub mod quad;
pub mod rng;
pub mod vec3;

pub use dynamics::{
    diagonalize, excited_population, fit_early_decay, initial_amplitudes, integrate_ode_oracle,
    per_atom_populations, population_trace, propagate, propagate_schedule, AmplitudeState,
    EigenSystem,
};
pub use error::{Error, Result};
pub use field::{
    angular_density, build_angular_grid, cone_fraction, mode_overlap, mode_projection, AngularGrid,
    EmissionProfile, ModeFunction,
};
pub use geometry::{
    apply_perturbation, build_lattice, jitter_positions, remove_atoms, PerturbationSpec,
    PhysicalParams, SampleGeometry,
};
pub use kernel::{build_kernel, collective_rate, coupling_entry, CouplingKernel};
pub use vec3::Vec3;

// Ensure the BLAS provider is linked for `ndarray`'s gemm routines.
use blas_src as _;
