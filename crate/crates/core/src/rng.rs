//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by a
//! master seed, a stage name and an item index, so any stage can be rerun on
//! its own and reproduce the draws it made inside a full pipeline run.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

/// FNV-1a over the stage name, folded with the seed and index through a
/// splitmix64 finalizer.
pub fn derive_seed(seed: u64, stage: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h.rotate_left(17) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for item `index` of `stage` under the master `seed`.
pub fn stream(seed: u64, stage: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stage, index))
}
