//! Deterministic sampling primitives for reproducible perturbations.
//!
//! Every randomized geometry operation draws from a ChaCha8 stream seeded with
//! a caller-provided 64-bit seed. The value derivations are spelled out here
//! instead of delegated to distribution crates, so that perturbation sweeps
//! are bit-reproducible across builds and dependency upgrades:
//!
//! * uniform doubles take the top 53 bits of one `u64`,
//! * normal deviates use one Box-Muller cosine branch per value (two uniforms),
//! * index subsets come from a partial Fisher-Yates shuffle with rejection-
//!   sampled bounded integers.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in [0, 1) with 53-bit resolution.
pub fn uniform_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `0..bound` without modulo bias.
pub fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    assert!(bound > 0, "uniform_below: bound must be positive");
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let r = rng.next_u64();
        if r < zone {
            return r % bound;
        }
    }
}

/// Standard normal deviate (Box-Muller, cosine branch only).
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - uniform_f64(rng); // in (0, 1], keeps the log finite
    let u2 = uniform_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `k` distinct indices drawn uniformly from `0..n`, returned ascending.
pub fn sample_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "sample_indices: k must not exceed n");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_below(rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut picked = pool[..k].to_vec();
    picked.sort_unstable();
    picked
}
