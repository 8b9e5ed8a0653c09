//! Counter-keyed random streams.
//!
//! Every random draw in the crate comes from a stream addressed by the master
//! seed plus a path of integer keys (a purpose tag, an iteration index, a
//! feature index, ...). Two calls with the same address see the same stream
//! no matter which thread runs them or in what order, so parallel work stays
//! bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags, so that streams for different jobs never collide.
pub mod tag {
    pub const LABELS: u64 = 0x10;
    pub const INFORMATIVE: u64 = 0x11;
    pub const REDUNDANT: u64 = 0x12;
    pub const NOISE: u64 = 0x13;
    pub const CENTROIDS: u64 = 0x14;
    pub const WEIGHTS: u64 = 0x15;
    pub const EPSILON: u64 = 0x16;
    pub const FLIP: u64 = 0x17;
    pub const SPLIT: u64 = 0x20;
    pub const TREE: u64 = 0x30;
    pub const MDA: u64 = 0x40;
    pub const LIME: u64 = 0x41;
    pub const SHAP: u64 = 0x42;
    pub const BACKGROUND: u64 = 0x43;
    pub const SUBSAMPLE: u64 = 0x44;
    pub const EXPERIMENT: u64 = 0x50;
    pub const RUN: u64 = 0x51;
    pub const MODEL: u64 = 0x60;
    pub const TRADES: u64 = 0x61;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a 64-bit seed from a master seed and a key path.
pub fn derive(seed: u64, keys: &[u64]) -> u64 {
    let mut h = mix64(seed ^ 0x9E37_79B9_7F4A_7C15);
    for &k in keys {
        h = mix64(
            h.wrapping_add(0x9E37_79B9_7F4A_7C15) ^ mix64(k.wrapping_add(0xD134_2543_DE82_EF95)),
        );
    }
    h
}

pub fn stream(seed: u64, keys: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive(seed, keys))
}
