//! Seed derivation and uniform streams.
//!
//! Every random draw in the crate comes from a ChaCha20 stream keyed by a
//! 64-bit seed. Replication seeds are derived from a master seed with a
//! splitmix64 mix of the replication index, so extending a study with more
//! replications leaves the earlier streams untouched.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1)))
}

/// Stream of uniforms on the open interval (0, 1).
pub struct UniformStream {
    rng: ChaCha20Rng,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Midpoint of one of 2^53 equal cells, so never 0 or 1.
    pub fn next_open01(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}
