//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose 64-bit
//! seed is derived from a parent seed and a stream label with the
//! SplitMix64 finalizer:
//!
//! ```text
//! child = splitmix64(parent ^ splitmix64(label))
//! ```
//!
//! The receiver regenerates the reference preamble from the same seed, so
//! this mapping is part of the wire contract and must stay fixed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels for per-trial seed splitting.
pub mod stream {
    pub const PREAMBLE: u64 = 0x5052_4541;
    pub const DATA: u64 = 0x4441_5441;
    pub const CHANNEL: u64 = 0x4348_414e;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const INTERFERENCE: u64 = 0x494e_5446;
    pub const NBI_PHASE: u64 = 0x4e42_4950;
    pub const NBI_FREQ: u64 = 0x4e42_4946;
    pub const CFO: u64 = 0x4346_4f00;
    pub const TRIAL: u64 = 0x5452_4941;
    pub const WBI_OFFSET: u64 = 0x5742_494f;
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(parent: u64, label: u64) -> u64 {
    splitmix64(parent ^ splitmix64(label))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(parent: u64, label: u64) -> ChaCha8Rng {
    rng_from(derive_seed(parent, label))
}
