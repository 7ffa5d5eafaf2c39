//! Seeded, splittable random streams.
//!
//! Every stochastic component draws from a ChaCha stream identified by a
//! `(seed, stream_id)` pair, so independent consumers never share state and
//! reruns with the same identifiers are bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngStream = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Derive a child stream id from a parent id and an index, e.g. one stream per
/// gesture or per epoch.
pub fn child_id(parent: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = parent
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index)
        .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
