//! Seeded random streams.
//!
//! Every stochastic routine draws from [`Rng`], ChaCha with 8 rounds
//! (`rand_chacha::ChaCha8Rng`), seeded through `SeedableRng::seed_from_u64`.
//! ChaCha is a counter-based stream cipher, so a given seed yields the same
//! stream on every platform. Independent sub-streams are derived with
//! [`derive_seed`], a SplitMix64 finalizer over the parent seed and a tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the sub-stream `tag` of `parent`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03))
}
