//! Acceptance suite: one test per criterion, each printing a `ACCEPTANCE <n>`
//! pass/fail line with the measured numbers.
//!
//! The reference sample is the 7×7×20 lattice at 0.37 μm spacing with k₀
//! along the long axis. At the default 0.795 μm wavelength the collective
//! rate lands at 6.13 γ₁, outside the 5.7 ± 0.3 band, so criterion 1
//! exercises its documented fallback: the 0.780 μm run reproduces 5.730 γ₁
//! and the remaining quantitative criteria are evaluated on that sample.
//!
//! Heavy criteria serialize on a mutex so their wall-clock bounds are not
//! distorted by each other.

use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use collemit::field::DARK_MODE_THRESHOLD;
use collemit::kernel::symmetric_state_residual;
use collemit::*;

const REFERENCE_DIMS: [usize; 3] = [7, 7, 20];
const REFERENCE_SPACING_UM: f64 = 0.37;
const D1_WAVELENGTH_UM: f64 = 0.795;
const D2_WAVELENGTH_UM: f64 = 0.780;
const RATE_BAND_CENTER: f64 = 5.7;
const RATE_BAND_HALF_WIDTH: f64 = 0.3;
const CONE_HALF_ANGLE_RAD: f64 = 0.3;
/// Reference angular resolution for the cone-fraction criterion. 64×64
/// fails the criterion's own doubling bound (|Δ| = 1.5e-3 > 1e-3), so the
/// reference is one doubling up, where 128→256 changes the cone fraction by
/// 7.7e-4.
const CONE_REFERENCE_GRID: usize = 128;

static TIMED: Mutex<()> = Mutex::new(());
static FIXTURE: OnceLock<ReferenceFixture> = OnceLock::new();

struct ReferenceFixture {
    /// The 0.780 μm sample that reproduces the quoted collective rate.
    sample: SampleGeometry,
    eigen: EigenSystem,
    gamma_col: f64,
    grid64: Arc<AngularGrid>,
    modefn64: ModeFunction,
}

fn reference_sample(wavelength_um: f64) -> SampleGeometry {
    let params = PhysicalParams {
        wavelength_um,
        ..Default::default()
    };
    build_lattice(REFERENCE_DIMS, REFERENCE_SPACING_UM, &params).expect("reference lattice")
}

fn fixture() -> &'static ReferenceFixture {
    FIXTURE.get_or_init(|| {
        let sample = reference_sample(D2_WAVELENGTH_UM);
        let kernel = build_kernel(&sample);
        let gamma_col = collective_rate(&kernel);
        let eigen = diagonalize(&kernel).expect("reference eigensystem");
        let grid64 = Arc::new(build_angular_grid(64, 64).expect("64x64 grid"));
        let modefn64 = mode_projection(&sample, &eigen, Arc::clone(&grid64));
        ReferenceFixture {
            sample,
            eigen,
            gamma_col,
            grid64,
            modefn64,
        }
    })
}

fn logspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let ratio = (stop / start).powf(1.0 / (count - 1) as f64);
    let mut t = start;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(t);
        t *= ratio;
    }
    *out.last_mut().unwrap() = stop;
    out
}

fn random_cloud(n: usize, half_width_um: f64, seed: u64) -> SampleGeometry {
    let mut rng = collemit::rng::seeded(seed);
    let positions = (0..n)
        .map(|_| {
            Vec3::new(
                half_width_um * (2.0 * collemit::rng::uniform_f64(&mut rng) - 1.0),
                half_width_um * (2.0 * collemit::rng::uniform_f64(&mut rng) - 1.0),
                half_width_um * (2.0 * collemit::rng::uniform_f64(&mut rng) - 1.0),
            )
        })
        .collect();
    SampleGeometry::new(
        positions,
        std::f64::consts::TAU / D1_WAVELENGTH_UM,
        Vec3::Z,
        geometry::DEFAULT_GAMMA1_PER_US,
    )
    .expect("random cloud")
}

#[test]
fn criterion_1_collective_rate() {
    fixture();
    let _guard = TIMED
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());

    let started = Instant::now();
    let s_d1 = reference_sample(D1_WAVELENGTH_UM);
    let ratio_d1 = collective_rate(&build_kernel(&s_d1)) / s_d1.gamma1();
    let in_band_d1 = (ratio_d1 - RATE_BAND_CENTER).abs() <= RATE_BAND_HALF_WIDTH;

    let s_d2 = reference_sample(D2_WAVELENGTH_UM);
    let ratio_d2 = collective_rate(&build_kernel(&s_d2)) / s_d2.gamma1();
    let in_band_d2 = (ratio_d2 - RATE_BAND_CENTER).abs() <= RATE_BAND_HALF_WIDTH;
    let elapsed = started.elapsed();

    println!(
        "ACCEPTANCE 1 collective-rate: {} — gamma_col/gamma1 = {ratio_d1:.4} at {D1_WAVELENGTH_UM} um ({}), \
         {ratio_d2:.4} at {D2_WAVELENGTH_UM} um ({}), band {RATE_BAND_CENTER} +/- {RATE_BAND_HALF_WIDTH}, {elapsed:.2?}",
        if in_band_d1 || in_band_d2 { "PASS" } else { "FAIL" },
        if in_band_d1 { "in band" } else { "outside band" },
        if in_band_d2 { "in band" } else { "outside band" },
    );

    // The default wavelength misses the band; the documented fallback must
    // land inside it.
    assert!(
        in_band_d1 || in_band_d2,
        "collective rate outside the band at both wavelengths: {ratio_d1:.4} / {ratio_d2:.4}"
    );
    // Frozen regression anchor for the in-band wavelength.
    assert!(
        (ratio_d2 - 5.730_055_851_298).abs() < 1e-9,
        "0.780 um rate drifted: {ratio_d2}"
    );
    assert!(
        elapsed < Duration::from_secs(1),
        "collective rate took {elapsed:.2?}"
    );
}

#[test]
fn criterion_2_early_exponential_decay() {
    fixture();
    let _guard = TIMED
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());

    let started = Instant::now();
    let sample = reference_sample(D2_WAVELENGTH_UM);
    let kernel = build_kernel(&sample);
    let gamma_col = collective_rate(&kernel);
    let eigen = diagonalize(&kernel).expect("eigensolve");

    // Trace dense enough to resolve the P >= 0.7 window; the windowed
    // least-squares estimator carries an intrinsic curvature bias that decays
    // as the early window is resolved.
    let times = logspace(1e-8, 0.2, 2000);
    let populations = population_trace(&eigen, &times, sample.gamma1()).expect("trace");
    let fitted = fit_early_decay(&times, &populations).expect("fit");
    let deviation = (fitted - 2.0 * gamma_col).abs() / (2.0 * gamma_col);
    let elapsed = started.elapsed();

    // The default plotting schedule yields a larger bias; report it for
    // comparison.
    let coarse_times = logspace(1e-4, 0.2, 200);
    let coarse_pops = population_trace(&eigen, &coarse_times, sample.gamma1()).expect("trace");
    let coarse_dev = (fit_early_decay(&coarse_times, &coarse_pops).expect("fit") - 2.0 * gamma_col)
        .abs()
        / (2.0 * gamma_col);

    println!(
        "ACCEPTANCE 2 early-decay fit: {} — 2*gamma_fit = {fitted:.4} /us vs 2*gamma_col = {:.4} /us, \
         deviation {:.3}% (coarse 200-pt schedule: {:.3}%), {elapsed:.2?}",
        if deviation <= 0.02 { "PASS" } else { "FAIL" },
        2.0 * gamma_col,
        100.0 * deviation,
        100.0 * coarse_dev,
    );
    assert!(
        deviation <= 0.02,
        "fit deviates from 2*gamma_col by {:.3}%",
        100.0 * deviation
    );
    assert!(
        elapsed < Duration::from_secs(30),
        "fit pipeline took {elapsed:.2?}"
    );
}

#[test]
fn criterion_3_departure_from_exponential() {
    let fx = fixture();
    let t = 0.1;
    let survival = excited_population(&propagate(&fx.eigen, t, fx.sample.gamma1()).unwrap());
    let reference = (-2.0 * fx.gamma_col * t).exp();
    let pass = (0.005..=0.10).contains(&survival) && reference < 1e-4;
    println!(
        "ACCEPTANCE 3 late-time survival: {} — P(0.1 us) = {survival:.5} in [0.005, 0.10], \
         exponential reference {reference:.3e} < 1e-4",
        if pass { "PASS" } else { "FAIL" },
    );
    assert!(
        (0.005..=0.10).contains(&survival),
        "survival {survival} outside the few-per-cent band"
    );
    assert!(
        reference < 1e-4,
        "exponential reference {reference} not yet negligible"
    );
}

#[test]
fn criterion_4_emission_cone() {
    let fx = fixture();
    let _guard = TIMED
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());

    let started = Instant::now();
    let grid = Arc::new(build_angular_grid(CONE_REFERENCE_GRID, CONE_REFERENCE_GRID).unwrap());
    let modefn = mode_projection(&fx.sample, &fx.eigen, Arc::clone(&grid));
    let profile = angular_density(&modefn, f64::INFINITY).unwrap();
    let axis = fx.sample.k0_direction();
    let forward = cone_fraction(&profile, axis, CONE_HALF_ANGLE_RAD).unwrap();
    let elapsed = started.elapsed();

    let doubled_grid =
        Arc::new(build_angular_grid(2 * CONE_REFERENCE_GRID, 2 * CONE_REFERENCE_GRID).unwrap());
    let modefn_doubled = mode_projection(&fx.sample, &fx.eigen, Arc::clone(&doubled_grid));
    let profile_doubled = angular_density(&modefn_doubled, f64::INFINITY).unwrap();
    let forward_doubled = cone_fraction(&profile_doubled, axis, CONE_HALF_ANGLE_RAD).unwrap();
    let delta = (forward - forward_doubled).abs();

    let backward = cone_fraction(&profile, -axis, CONE_HALF_ANGLE_RAD).unwrap();
    println!(
        "ACCEPTANCE 4 emission cone: {} — forward cone fraction {forward:.5} at \
         {CONE_REFERENCE_GRID}x{CONE_REFERENCE_GRID} (doubling delta {delta:.2e} < 1e-3: {}), \
         reference-grid runtime {elapsed:.2?}; diagnostic: backward lobe {backward:.5}, \
         axis-as-line fraction {:.5}",
        if forward >= 0.95 && delta < 1e-3 {
            "PASS"
        } else {
            "FAIL"
        },
        if delta < 1e-3 { "yes" } else { "no" },
        forward + backward,
    );
    assert!(
        elapsed < Duration::from_secs(300),
        "reference resolution took {elapsed:.2?}"
    );
    assert!(
        delta < 1e-3,
        "grid doubling moved the cone fraction by {delta:.2e}"
    );
    // The one-sided cone converges to ~0.943: the 0.95 bound holds only for
    // the within-the-half-angle-of-the-axis-line reading (forward plus
    // backward caps, printed above). Asserted as specified; see the decisions
    // ledger for the analysis.
    assert!(
        forward >= 0.95,
        "forward cone fraction {forward:.5} < 0.95 (axis-line fraction {:.5})",
        forward + backward
    );
}

#[test]
fn criterion_5_removal_robustness() {
    let fx = fixture();
    let _guard = TIMED
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());

    let started = Instant::now();
    use rayon::prelude::*;
    let mut worst: Option<TrialResult> = None;
    let mut all: Vec<TrialResult> = Vec::new();
    for &k in &[10usize, 30] {
        let trials: Vec<TrialResult> = (0..20u64)
            .into_par_iter()
            .map(|i| {
                let seed = 1000 * k as u64 + i;
                let spec = PerturbationSpec {
                    removal_count: Some(k),
                    seed,
                    ..Default::default()
                };
                let perturbed = remove_atoms(&fx.sample, &spec).expect("removal");
                let eigen = diagonalize(&build_kernel(&perturbed)).expect("trial eigensolve");
                let modefn = mode_projection(&perturbed, &eigen, Arc::clone(&fx.grid64));
                let fidelity = mode_overlap(&fx.modefn64, &modefn).expect("overlap");
                TrialResult {
                    removed: k,
                    seed,
                    fidelity,
                }
            })
            .collect();
        all.extend(trials);
    }
    for t in &all {
        if worst.as_ref().is_none_or(|w| t.fidelity < w.fidelity) {
            worst = Some(t.clone());
        }
    }
    let worst = worst.unwrap();
    let elapsed = started.elapsed();

    let mean: f64 = all.iter().map(|t| t.fidelity).sum::<f64>() / all.len() as f64;
    println!(
        "ACCEPTANCE 5 removal robustness: {} — {} trials (k in {{10, 30}}, 20 seeds each), \
         min fidelity {:.6} (k={}, seed={}), mean {:.6}, {elapsed:.2?}",
        if worst.fidelity >= 0.99 {
            "PASS"
        } else {
            "FAIL"
        },
        all.len(),
        worst.fidelity,
        worst.removed,
        worst.seed,
        mean,
    );
    assert!(
        worst.fidelity >= 0.99,
        "minimum overlap {:.6} below 0.99 (k={}, seed={})",
        worst.fidelity,
        worst.removed,
        worst.seed
    );
    assert!(
        elapsed < Duration::from_secs(1800),
        "sweep took {elapsed:.2?}"
    );
}

#[derive(Clone)]
struct TrialResult {
    removed: usize,
    seed: u64,
    fidelity: f64,
}

#[test]
fn criterion_6_oracle_equivalence() {
    let sizes = [2usize, 5, 20, 50, 2, 5, 20, 50, 20, 50];
    let mut worst = 0.0f64;
    for (trial, &n) in sizes.iter().enumerate() {
        let sample = random_cloud(n, 1.5, 4200 + trial as u64);
        let kernel = build_kernel(&sample);
        let eigen = diagonalize(&kernel).expect("eigensolve");
        let gamma1 = sample.gamma1();
        let dt = 0.01 / (gamma1 * kernel.gershgorin_bound());
        for &gt in &[0.1, 1.0, 5.0] {
            let t = gt / gamma1;
            let exact = propagate(&eigen, t, gamma1).unwrap();
            let oracle = integrate_ode_oracle(&kernel, t, dt).unwrap();
            let dev = exact
                .beta()
                .iter()
                .zip(oracle.beta().iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            worst = worst.max(dev);
        }
    }
    println!(
        "ACCEPTANCE 6 oracle equivalence: {} — 10 random geometries, gamma1*t in {{0.1, 1, 5}}, \
         max |delta beta| = {worst:.3e} <= 1e-8",
        if worst <= 1e-8 { "PASS" } else { "FAIL" },
    );
    assert!(
        worst <= 1e-8,
        "propagate and the ODE oracle disagree by {worst:.3e}"
    );
}

/// Runs the full invariant suite against one sample and returns a short
/// description of the worst deviations.
fn invariant_suite(sample: &SampleGeometry, grid: &Arc<AngularGrid>) -> String {
    let n = sample.len();
    let kernel = build_kernel(sample);

    assert!(
        kernel::hermiticity_defect(&kernel) <= 1e-12,
        "kernel not Hermitian"
    );
    let trace: f64 = (0..n).map(|j| kernel.matrix()[[j, j]].re).sum();
    assert!(
        (trace - n as f64).abs() <= 1e-9 * n as f64,
        "trace {trace} != {n}"
    );

    // PSD within tolerance is enforced by diagonalize (clamp band -1e-10*N).
    let eigen = diagonalize(&kernel).expect("eigensolve");
    assert!(
        eigen.unitarity_defect() <= 1e-10,
        "eigenvector unitarity defect {}",
        eigen.unitarity_defect()
    );
    let weight: f64 = eigen.mode_coefficients().iter().map(|c| c.norm_sqr()).sum();
    assert!(
        (weight - 1.0).abs() <= 1e-12,
        "mode weights sum to {weight}"
    );

    // Population is monotone non-increasing.
    let gamma1 = sample.gamma1();
    let times = logspace(1e-4, 0.5, 60);
    let pops = population_trace(&eigen, &times, gamma1).unwrap();
    for pair in pops.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "population increased: {pair:?}");
    }

    // Cross-module: collective rate equals the mode-weighted eigenvalue sum.
    let modal: f64 = eigen
        .eigenvalues()
        .iter()
        .zip(eigen.mode_coefficients().iter())
        .map(|(&lam, c)| lam * c.norm_sqr())
        .sum();
    let direct = collective_rate(&kernel);
    assert!(
        (direct - gamma1 * modal).abs() <= 1e-10 * direct,
        "collective rate mismatch: {direct} vs {}",
        gamma1 * modal
    );

    let modefn = mode_projection(sample, &eigen, Arc::clone(grid));

    // Per-direction completeness sum_m |A_m(n)|^2 = N.
    let mut completeness_dev = 0.0f64;
    for i in 0..grid.len() {
        let sum: f64 = (0..n)
            .map(|m| modefn.projections()[[m, i]].norm_sqr())
            .sum();
        completeness_dev = completeness_dev.max((sum - n as f64).abs());
    }
    assert!(
        completeness_dev <= 1e-8 * n as f64,
        "completeness deviates by {completeness_dev:.3e}"
    );

    // Quadrature orthogonality on the top-20 modes.
    let top = 20.min(n);
    let mut ortho_dev = 0.0f64;
    for m in 0..top {
        for mp in 0..top {
            let mut s = num_complex::Complex64::new(0.0, 0.0);
            for i in 0..grid.len() {
                s += modefn.projections()[[m, i]].conj()
                    * modefn.projections()[[mp, i]]
                    * grid.weights()[i];
            }
            s /= num_complex::Complex64::new(4.0 * std::f64::consts::PI, 0.0);
            let expected = if m == mp { eigen.eigenvalues()[m] } else { 0.0 };
            ortho_dev = ortho_dev.max((s - expected).norm() / eigen.eigenvalues()[m]);
        }
    }
    assert!(
        ortho_dev <= 1e-3,
        "quadrature orthogonality off by {ortho_dev:.3e}"
    );

    // Unitarity closure: emitted + surviving = 1 at finite times and infinity.
    let mut closure_dev = 0.0f64;
    for &t in &[0.0, 0.005, 0.02, 0.1, f64::INFINITY] {
        let profile = angular_density(&modefn, t).unwrap();
        for &rho in profile.density() {
            assert!(rho >= -1e-12, "negative density {rho}");
        }
        let survival = if t.is_infinite() {
            eigen
                .eigenvalues()
                .iter()
                .zip(eigen.mode_coefficients().iter())
                .filter(|(&lam, _)| lam <= DARK_MODE_THRESHOLD)
                .map(|(_, c)| c.norm_sqr())
                .sum()
        } else {
            eigen.mode_survival(gamma1, t)
        };
        closure_dev = closure_dev.max((profile.total_emitted() + survival - 1.0).abs());
    }
    assert!(closure_dev <= 1e-6, "closure violated by {closure_dev:.3e}");

    // Self-overlap is exactly one up to roundoff.
    let self_overlap = mode_overlap(&modefn, &modefn).unwrap();
    assert!(
        (self_overlap - 1.0).abs() <= 1e-10,
        "self overlap {self_overlap}"
    );

    format!(
        "completeness {completeness_dev:.1e}, orthogonality {ortho_dev:.1e}, closure {closure_dev:.1e}"
    )
}

#[test]
fn criterion_7_invariant_suite() {
    let fx = fixture();
    let _guard = TIMED
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());

    let reference_report = invariant_suite(&fx.sample, &fx.grid64);

    let grid = Arc::new(build_angular_grid(64, 64).unwrap());
    let mut small_reports = Vec::new();
    for (i, &n) in [3usize, 8, 15, 25, 40].iter().enumerate() {
        let sample = random_cloud(n, 1.2, 9000 + i as u64);
        small_reports.push(invariant_suite(&sample, &grid));
    }
    println!(
        "ACCEPTANCE 7 invariant suite: PASS — reference sample ({reference_report}); \
         5 random samples worst case ({})",
        small_reports.last().unwrap(),
    );
}

#[test]
fn criterion_8_small_system_anchors() {
    // Single atom: exponential decay and isotropic emission.
    let single =
        build_lattice([1, 1, 1], REFERENCE_SPACING_UM, &PhysicalParams::default()).unwrap();
    let eigen = diagonalize(&build_kernel(&single)).unwrap();
    let gamma1 = single.gamma1();
    let mut pop_dev = 0.0f64;
    for &t in &[0.0, 0.01, 0.05, 0.1, 0.3] {
        let p = excited_population(&propagate(&eigen, t, gamma1).unwrap());
        pop_dev = pop_dev.max((p - (-2.0 * gamma1 * t).exp()).abs());
    }
    assert!(
        pop_dev <= 1e-10,
        "single-atom decay deviates by {pop_dev:.3e}"
    );

    let grid = Arc::new(build_angular_grid(16, 16).unwrap());
    let modefn = mode_projection(&single, &eigen, Arc::clone(&grid));
    let profile = angular_density(&modefn, f64::INFINITY).unwrap();
    let isotropic = 1.0 / (4.0 * std::f64::consts::PI);
    let iso_dev = profile
        .density()
        .iter()
        .map(|rho| (rho - isotropic).abs())
        .fold(0.0f64, f64::max);
    assert!(
        iso_dev <= 1e-10,
        "single-atom density deviates by {iso_dev:.3e}"
    );

    // Coincident pair: exact Dicke rate.
    let k0 = std::f64::consts::TAU / D1_WAVELENGTH_UM;
    let pair = SampleGeometry::new(vec![Vec3::ZERO, Vec3::ZERO], k0, Vec3::Z, gamma1).unwrap();
    let dicke_rate = collective_rate(&build_kernel(&pair));
    assert_eq!(dicke_rate, 2.0 * gamma1, "Dicke pair rate {dicke_rate}");

    // Separated pair: eigenvalues 1 +/- |sinc(k0 d)|.
    let d = 0.37;
    let pair = SampleGeometry::new(
        vec![Vec3::ZERO, Vec3::new(0.0, 0.0, d)],
        k0,
        Vec3::Z,
        gamma1,
    )
    .unwrap();
    let eigen = diagonalize(&build_kernel(&pair)).unwrap();
    let split = kernel::sinc(k0 * d).abs();
    let dev = (eigen.eigenvalues()[0] - (1.0 + split))
        .abs()
        .max((eigen.eigenvalues()[1] - (1.0 - split)).abs());
    assert!(dev <= 1e-10, "pair eigenvalues deviate by {dev:.3e}");

    println!(
        "ACCEPTANCE 8 small-system anchors: PASS — single-atom decay dev {pop_dev:.1e}, \
         isotropy dev {iso_dev:.1e}, Dicke rate exact, pair split dev {dev:.1e}"
    );
}

// Supplementary reference-sample anchors beyond the numbered criteria.

#[test]
fn reference_departure_ratio_exceeds_ten() {
    let fx = fixture();
    let t = 0.1;
    let survival = excited_population(&propagate(&fx.eigen, t, fx.sample.gamma1()).unwrap());
    let ratio = survival / (-2.0 * fx.gamma_col * t).exp();
    assert!(ratio > 10.0, "departure ratio {ratio:.3e}");
}

#[test]
fn reference_symmetric_state_is_not_an_eigenvector() {
    let fx = fixture();
    let kernel = build_kernel(&fx.sample);
    let residual = symmetric_state_residual(&kernel);
    assert!(residual > 0.0, "symmetric-state residual {residual}");
    // Single atom: the symmetric state IS the eigenvector.
    let single =
        build_lattice([1, 1, 1], REFERENCE_SPACING_UM, &PhysicalParams::default()).unwrap();
    assert_eq!(symmetric_state_residual(&build_kernel(&single)), 0.0);
}

#[test]
fn reference_layer_asymmetry_at_default_wavelength() {
    // The spatial symmetry of the excited-state population is broken by
    // t = 0.01 us: layer-averaged populations along the axis spread by more
    // than 1.5x on the 0.795 um sample.
    let _guard = TIMED
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());
    let sample = reference_sample(D1_WAVELENGTH_UM);
    let eigen = diagonalize(&build_kernel(&sample)).unwrap();
    let state = propagate(&eigen, 0.01, sample.gamma1()).unwrap();
    let pops = per_atom_populations(&state);

    let nz = REFERENCE_DIMS[2];
    let mut layer_sums = vec![0.0f64; nz];
    let mut layer_counts = vec![0usize; nz];
    let spacing = REFERENCE_SPACING_UM;
    for (&p, pos) in pops.iter().zip(sample.positions()) {
        let iz = ((pos.z / spacing) + (nz as f64 - 1.0) / 2.0).round() as usize;
        layer_sums[iz] += p;
        layer_counts[iz] += 1;
    }
    let means: Vec<f64> = layer_sums
        .iter()
        .zip(&layer_counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(
        max / min > 1.5,
        "layer-averaged population ratio {:.3} at t = 0.01 us",
        max / min
    );
}

#[test]
fn axis_line_cone_fraction_exceeds_95_percent() {
    // Within 0.3 rad of the sample axis read as a line (both caps), more
    // than 95% of the photon probability is collected — the reading under
    // which the quoted bound holds at both candidate wavelengths.
    let fx = fixture();
    let profile = angular_density(&fx.modefn64, f64::INFINITY).unwrap();
    let axis = fx.sample.k0_direction();
    let forward = cone_fraction(&profile, axis, CONE_HALF_ANGLE_RAD).unwrap();
    let backward = cone_fraction(&profile, -axis, CONE_HALF_ANGLE_RAD).unwrap();
    assert!(
        forward + backward >= 0.95,
        "axis-line cone fraction {:.5}",
        forward + backward
    );
}

#[test]
fn overlap_is_grid_converged() {
    // Doubling the angular rule moves the overlap fidelity by less than
    // 1e-4 (the detuning integral is analytic and the angular integrand a
    // bounded-degree trigonometric polynomial, so the quadrature is exact).
    let fx = fixture();
    let _guard = TIMED
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner());

    let spec = PerturbationSpec {
        removal_count: Some(10),
        seed: 777,
        ..Default::default()
    };
    let perturbed = remove_atoms(&fx.sample, &spec).unwrap();
    let eigen_b = diagonalize(&build_kernel(&perturbed)).unwrap();

    let modefn_b64 = mode_projection(&perturbed, &eigen_b, Arc::clone(&fx.grid64));
    let fid64 = mode_overlap(&fx.modefn64, &modefn_b64).unwrap();

    let grid128 = Arc::new(build_angular_grid(128, 128).unwrap());
    let modefn_a128 = mode_projection(&fx.sample, &fx.eigen, Arc::clone(&grid128));
    let modefn_b128 = mode_projection(&perturbed, &eigen_b, Arc::clone(&grid128));
    let fid128 = mode_overlap(&modefn_a128, &modefn_b128).unwrap();

    assert!(
        (fid64 - fid128).abs() < 1e-4,
        "overlap moved by {:.3e} under grid doubling",
        (fid64 - fid128).abs()
    );
}
