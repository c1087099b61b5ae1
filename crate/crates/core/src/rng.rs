//! Seed derivation. Every random stream in the crate starts from the single
//! run seed; attacks use `seed ^ image_index`, CLEVER additionally mixes in
//! the target class.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-image attack seed.
#[inline]
pub fn image_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Splitmix64 finalizer; decorrelates nearby seeds.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the CLEVER fit of `(image, class)`.
#[inline]
pub fn class_seed(seed: u64, index: usize, class: usize) -> u64 {
    mix(mix(image_seed(seed, index)) ^ class as u64)
}
