//! Seeded, stream-partitioned random number generation.
//!
//! Every Monte Carlo replicate owns a ChaCha stream derived from the
//! experiment seed and a tuple of stream identifiers, so results do not
//! depend on how replicates are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapse a tuple of identifiers into one 64-bit stream number.
pub fn stream_id(ids: &[u64]) -> u64 {
    ids.iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

/// Generator for `(seed, ids...)`.
pub fn stream(seed: u64, ids: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(ids));
    rng
}
