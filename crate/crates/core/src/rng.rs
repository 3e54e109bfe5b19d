//! Seed stream splitting.
//!
//! Every random consumer derives its generator from a root seed plus a
//! sequence of stream labels, so parallel and serial runs draw identical
//! numbers: `stream(seed, &[TREE, 17])` is the generator for tree 17.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const SPLIT: u64 = 0x5350_4c49;
pub const FOLD: u64 = 0x464f_4c44;
pub const TREE: u64 = 0x5452_4545;
pub const STAGE: u64 = 0x5354_4147;
pub const PERMUTE: u64 = 0x5045_524d;
pub const CANDIDATE: u64 = 0x4341_4e44;
pub const LINEAR_CV: u64 = 0x4c49_4e43;
pub const SYNTH: u64 = 0x5359_4e54;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and an ordered list of labels.
pub fn derive(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix(seed), |acc, &l| mix(acc ^ mix(l)))
}

pub fn stream(seed: u64, labels: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(seed, labels))
}
