//! Deterministic RNG stream derivation.
//!
//! Every independent unit of work (bootstrap run, permutation, Monte Carlo
//! replication, simulated cloud) gets its own ChaCha stream keyed by a root
//! seed plus a path of indices, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a label.
#[inline]
pub fn derive(seed: u64, label: u64) -> u64 {
    mix64(seed ^ mix64(label))
}

/// RNG for the `index`-th unit of work under `domain` (a small tag that
/// separates e.g. bootstrap draws from permutation draws).
pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, domain));
    rng.set_stream(index);
    rng
}

pub mod domain {
    pub const BOOTSTRAP_SHAPE: u64 = 1;
    pub const BOOTSTRAP_COLOR: u64 = 2;
    pub const BOOTSTRAP_JOINT: u64 = 3;
    pub const PERMUTATION: u64 = 4;
    pub const NOMINAL: u64 = 5;
    pub const REFERENCE: u64 = 6;
    pub const STREAM: u64 = 7;
    pub const POOL: u64 = 8;
    pub const SOLVER: u64 = 9;
    pub const REPLICATION: u64 = 10;
    pub const RUNS: u64 = 11;
    pub const DEFECT: u64 = 12;
}
