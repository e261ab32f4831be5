//! Seeded, splittable random streams.
//!
//! Every stochastic operation takes an explicit `u64` seed. Independent
//! sub-streams (one per sequence, per trial, ...) are derived with
//! [`stream`], which selects a distinct ChaCha stream for the same key, so
//! results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive a child seed, for APIs that take a seed rather than a generator.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, index.wrapping_add(1 << 32)).next_u64()
}
