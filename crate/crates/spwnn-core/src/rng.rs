use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive an independent child seed from a base seed and a stream tag.
///
/// SplitMix64 finalizer over `base ^ tag * phi`; the same (base, tag) pair
/// always yields the same child on every platform, which is what keeps
/// per-partition and per-epoch shuffles reproducible.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The deterministic generator used everywhere randomness is needed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
