//! Reproducible random streams.
//!
//! Every stochastic object in the crate is a pure function of a master seed
//! and a 64-bit stream id. Streams are ChaCha8 keystreams: the seed fixes the
//! key and the stream id selects an independent nonce, so distinct ids never
//! overlap regardless of how many numbers each one draws, and results do not
//! depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream id namespaces. The high 24 bits name the purpose, the low 40 bits
/// index realizations within it.
pub mod tag {
    pub const NOISE: u64 = 1;
    pub const POLYMER_PATHS: u64 = 2;
    pub const SNAPSHOT_TIME: u64 = 3;
    pub const EVAL_POINT: u64 = 4;
    pub const INITIAL_DATA: u64 = 5;
    pub const RESAMPLE: u64 = 6;
}

pub fn stream_id(tag: u64, index: u64) -> u64 {
    debug_assert!(index < 1 << 40);
    (tag << 40) | (index & ((1 << 40) - 1))
}

pub fn stream(master_seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}
