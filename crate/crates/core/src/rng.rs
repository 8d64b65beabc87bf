//! Seed derivation. Every random decision flows from an explicit seed so
//! results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One step of the SplitMix64 mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the task identified by `parts` under `seed`.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Child seed keyed by a string tag.
pub fn derive_seed_str(seed: u64, tag: &str) -> u64 {
    // FNV-1a keeps the mapping stable across platforms and releases
    let h = tag
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    derive_seed(seed, &[h])
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = substream(7, 0).gen();
        let b: u64 = substream(7, 1).gen();
        assert_ne!(a, b);
        assert_eq!(a, substream(7, 0).gen::<u64>());
        assert_ne!(derive_seed(1, &[2]), derive_seed(1, &[3]));
        assert_eq!(derive_seed_str(1, "x"), derive_seed_str(1, "x"));
        assert_ne!(derive_seed_str(1, "x"), derive_seed_str(1, "y"));
    }
}
