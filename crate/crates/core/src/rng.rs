//! Seedable, portable random streams.
//!
//! Every stochastic operation takes an explicit generator. The generator is
//! ChaCha8 (`rand_chacha::ChaCha8Rng`), whose output is fixed across
//! platforms and crate versions for a given seed. Independent streams for
//! restarts, replicates and chains are derived from one user seed by keeping
//! the 64-bit seed and selecting a distinct ChaCha stream number:
//!
//! * stream `0` is the primary stream of a run;
//! * stream `1 + r` is used by restart `r` of a MAP-DPM fit;
//! * replicate harnesses derive a per-replicate seed with [`split_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Primary stream for `seed`.
pub fn seeded(seed: u64) -> Rng {
    stream(seed, 0)
}

/// Stream number `id` of `seed`.
pub fn stream(seed: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Derives the seed of child `index` from a parent seed (SplitMix64 finalizer).
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
