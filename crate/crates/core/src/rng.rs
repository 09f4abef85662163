//! Seeded random sources and the counter-based seed derivation.
//!
//! Every stochastic operation in the crate draws from a [`SimRng`] owned by
//! the caller. Independent streams (repetitions, worker threads, hash seeds)
//! are obtained with [`derive_seed`], which is a pure function of the master
//! seed and a counter: `splitmix64(master ^ splitmix64(counter + 1))`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// One step of the SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `counter` under `master`. Stable across releases.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    splitmix64(master ^ splitmix64(counter.wrapping_add(1)))
}

/// Convenience: an rng for stream `counter` under `master`.
pub fn derived(master: u64, counter: u64) -> SimRng {
    seeded(derive_seed(master, counter))
}
