//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! `(seed, stream)` pair: the 64-bit seed is expanded with
//! `ChaCha8Rng::seed_from_u64` and the stream id selects one of the 2^64
//! independent ChaCha streams under that key. Parallel work derives a
//! distinct stream id per task, so output never depends on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Vector;

/// Stream ids reserved for the separate roles inside one trial.
pub mod stream {
    pub const MODEL: u64 = 1;
    pub const TRAJECTORY: u64 = 2;
    pub const ROW: u64 = 3;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a base seed with an ordered list of identifiers into one seed.
pub fn derive_seed(base: u64, ids: &[u64]) -> u64 {
    ids.iter().fold(mix64(base), |acc, &id| mix64(acc ^ mix64(id)))
}

pub fn standard_normal_vector<R: rand::Rng + ?Sized>(rng: &mut R, p: usize) -> Vector {
    Vector::from_iterator(p, (0..p).map(|_| StandardNormal.sample(rng)))
}
