use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for work item `stream` of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finaliser; derives child seeds for sub-experiments.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_differ() {
        assert_ne!(stream_rng(1, 0).next_u64(), stream_rng(1, 1).next_u64());
        assert_eq!(stream_rng(1, 7).next_u64(), stream_rng(1, 7).next_u64());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut v: Vec<u64> = (0..1000).map(|t| derive_seed(42, t)).collect();
        v.sort();
        v.dedup();
        assert_eq!(v.len(), 1000);
    }
}
