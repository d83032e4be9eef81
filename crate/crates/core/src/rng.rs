//! Seed splitting.
//!
//! Every random stream is keyed by the master seed plus a path of labels
//! (operator tag, generation, slot). Streams never depend on scheduling, so
//! serial and parallel runs draw identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const TAG_INIT: u64 = 0x696e_6974;
pub const TAG_BREED: u64 = 0x6272_6565;
pub const TAG_DAY: u64 = 0x0064_6179;
pub const TAG_NULL: u64 = 0x6e75_6c6c;
pub const TAG_BASELINE: u64 = 0x6261_7365;
pub const TAG_PLANT: u64 = 0x706c_6e74;
pub const TAG_SERIES: u64 = 0x7365_7269;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a label path.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(seed), |acc, &label| mix64(acc ^ mix64(label)))
}

pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}
