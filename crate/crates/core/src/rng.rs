//! Deterministic random substreams.
//!
//! Everything stochastic in this crate (panel initialisation, detector noise,
//! dataset synthesis, trial loops) draws from a ChaCha stream derived from one
//! master seed plus a list of integer tags. Identical (seed, tags) always
//! yields an identical stream, independent of thread count or call order,
//! which is what makes batch runs reproducible byte for byte.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 scramble; good avalanche, cheap, stable.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent RNG from a master seed and a tag path.
///
/// Tags are absorbed one by one, then the state is expanded into a full
/// 256-bit ChaCha seed, so substream(seed, &[a, b]) and substream(seed, &[b, a])
/// are unrelated streams.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut s = absorb(seed, tags);
    for chunk in key.chunks_exact_mut(8) {
        s = mix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Derive a child seed (for handing to APIs that take a plain u64 seed)
/// from a master seed and a tag path. Same mixing as [`substream`].
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    mix(absorb(seed, tags))
}

fn absorb(seed: u64, tags: &[u64]) -> u64 {
    let mut s = mix(seed ^ 0x5BF0_3635_DAE3_B7C1);
    for &t in tags {
        s = mix(s ^ t);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substream_is_reproducible() {
        let mut a = substream(42, &[1, 2]);
        let mut b = substream(42, &[1, 2]);
        for _ in 0..16 {
            assert_eq!(a.gen::<u64>(), b.gen::<u64>());
        }
    }

    #[test]
    fn tag_order_matters() {
        let a = substream(42, &[1, 2]).gen::<u64>();
        let b = substream(42, &[2, 1]).gen::<u64>();
        assert_ne!(a, b);
    }

    #[test]
    fn different_seeds_diverge() {
        let a = substream(1, &[7]).gen::<u64>();
        let b = substream(2, &[7]).gen::<u64>();
        assert_ne!(a, b);
    }

    #[test]
    fn derived_seeds_are_stable_and_tag_sensitive() {
        assert_eq!(derive_seed(9, &[1, 2]), derive_seed(9, &[1, 2]));
        assert_ne!(derive_seed(9, &[1, 2]), derive_seed(9, &[2, 1]));
        assert_ne!(derive_seed(9, &[1]), derive_seed(10, &[1]));
    }
}
