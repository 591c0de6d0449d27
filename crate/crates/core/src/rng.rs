//! Reproducible random streams.
//!
//! Every Monte Carlo draw comes from a ChaCha8 generator keyed by a 64-bit
//! seed and a 64-bit stream index. Streams with the same seed are
//! independent keystreams, so shards can be generated in any order or on
//! any thread and still reproduce the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index of block `block` inside the namespace `stream`.
///
/// Monte Carlo runs split their samples into fixed-size blocks; block `b`
/// of namespace `s` draws from stream `(s << 32) | b`.
pub fn block_stream(stream: u32, block: u32) -> u64 {
    (u64::from(stream) << 32) | u64::from(block)
}
