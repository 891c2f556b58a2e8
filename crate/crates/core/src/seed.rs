//! Seed derivation.
//!
//! Every random stream in an experiment is derived from the master seed by
//! hashing a path of integers: `run = derive(master, [r])`,
//! `client = derive(run, [t, k])`, and tagged streams such as
//! `derive(run, [SELECT, t])`. A stream never depends on scheduling, so
//! parallel and serial execution consume identical randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const SPLIT: u64 = 0xF1A7_0000_0000_0001;
pub const PARTITION: u64 = 0xF1A7_0000_0000_0002;
pub const INIT: u64 = 0xF1A7_0000_0000_0003;
pub const SELECT: u64 = 0xF1A7_0000_0000_0004;

/// SplitMix64 finalizer.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(parent), |acc, &part| mix(acc ^ mix(part)))
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
