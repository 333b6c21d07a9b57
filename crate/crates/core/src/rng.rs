//! Reproducible random streams.
//!
//! Every replicate gets its own ChaCha8 stream: the 64-bit master seed
//! expands to the ChaCha key, and the replicate index selects the stream
//! word. `(seed, replicate)` therefore fully determines the draws, no matter
//! which thread ends up running the replicate or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Random stream for replicate `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a seed for an independent sub-experiment (e.g. one cell of a
/// parameter grid) so that cells never share streams.
pub fn subseed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
