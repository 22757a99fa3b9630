//! Seeded randomness.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), keyed
//! by `seed_from_u64(seed)` with the ChaCha stream id set to a per-unit index
//! (test item, Monte-Carlo trial). Integer draws use the rejection rule in
//! [`uniform_below`], so index sampling reproduces from the raw 64-bit output
//! stream alone.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for unit `stream` of a run seeded with `seed`.
pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform integer in `0..n`, unbiased by rejecting the top partial zone.
///
/// Panics if `n == 0`.
pub fn uniform_below<R: RngCore>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0, "uniform_below requires n > 0");
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

/// `k` distinct indices from `0..n` via partial Fisher-Yates, in draw order.
pub fn sample_indices<R: RngCore>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot draw {k} distinct indices from {n}");
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_below(rng, (n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}
