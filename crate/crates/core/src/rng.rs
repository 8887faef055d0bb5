//! Deterministic seed derivation.
//!
//! Every random draw in the crate flows from an explicit 64-bit seed through
//! [`derive_seed`], so distinct domains (world geometry, observation noise,
//! speaker templates, ...) never share a stream and reruns are bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `(seed, domain tag, index)`.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    // FNV-1a over the tag, then splitmix to decorrelate.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Seeded ChaCha8 stream.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Convenience: stream for `(seed, tag, index)`.
pub fn rng_for(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    rng(derive_seed(seed, tag, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_is_stable_and_separated() {
        let a = derive_seed(7, "world", 0);
        assert_eq!(a, derive_seed(7, "world", 0));
        assert_ne!(a, derive_seed(7, "world", 1));
        assert_ne!(a, derive_seed(7, "noise", 0));
        assert_ne!(a, derive_seed(8, "world", 0));
    }
}
