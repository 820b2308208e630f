//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream derived from an
//! explicit seed and a stream index, so per-sample work is reproducible no
//! matter the evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent stream `stream` of the generator family keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream for one of several named purposes sharing a seed.
pub fn purpose(seed: u64, tag: u64, index: u64) -> Rng {
    stream(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15), index)
}

/// Child seed for a named sub-task, decorrelated from the parent.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
