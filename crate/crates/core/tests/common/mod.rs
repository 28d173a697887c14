//! Deterministic generators shared by the integration tests.
#![allow(dead_code)]

use hgrowth::Lottery;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Strictly increasing support in `[lo, hi]` with `n` atoms and weights
/// bounded away from zero.
pub fn lottery(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, min_weight: f64) -> Lottery {
    loop {
        let mut support: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
        support.sort_by(|a, b| a.partial_cmp(b).unwrap());
        support.dedup();
        if support.len() != n || support.windows(2).any(|w| w[1] - w[0] < 1e-9) {
            continue;
        }
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(min_weight..1.0)).collect();
        return Lottery::normalized(support, weights).unwrap();
    }
}

pub fn random_interior_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}
