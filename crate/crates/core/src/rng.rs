//! Reproducible random streams for the Monte-Carlo routines.
//!
//! Work is cut into fixed-size batches and batch `i` always draws from ChaCha
//! stream `i` of the run's seed. Results are gathered in batch order, so the
//! output depends only on the seed and the trial count, never on how many
//! rayon workers happen to execute the batches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub(crate) const BATCH: u64 = 16_384;

/// Mixes a sub-experiment tag into a seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `work(rng, count)` over `total` units split into batches and returns
/// the per-batch outputs in batch order.
pub(crate) fn batched<T, F>(total: u64, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    let batches = total.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH.min(total - b * BATCH);
            let mut rng = stream(seed, b);
            work(&mut rng, count)
        })
        .collect()
}
