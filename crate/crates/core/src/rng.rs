//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value derived by mixing a base seed with a list of tags. Streams never
//! share mutable state, so results do not depend on call order or thread
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `base` with each tag in turn.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix(base), |acc, &t| splitmix(acc ^ splitmix(t.wrapping_add(GOLDEN))))
}

/// Opens a stream for `(base, tags...)`.
pub fn stream(base: u64, tags: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

/// Stream labels, so unrelated streams with equal numeric tags never collide.
pub mod label {
    pub const INIT: u64 = 0x01;
    pub const MUTATE: u64 = 0x02;
    pub const GAMMA: u64 = 0x03;
    pub const NOISE: u64 = 0x04;
    pub const LANDSCAPE: u64 = 0x05;
    pub const GENERATION: u64 = 0x06;
    pub const VARIATION: u64 = 0x07;
    pub const TRUNCATION: u64 = 0x08;
    pub const BASELINE: u64 = 0x09;
    pub const RESTART: u64 = 0x0A;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_tag_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[]), derive_seed(8, &[]));
        assert_ne!(derive_seed(0, &[0]), derive_seed(0, &[]));
    }
}
