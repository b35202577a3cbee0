//! Seeded random number streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator seeded with
//! `seed_from_u64` and switched to a numbered stream. Distinct streams under one
//! seed are independent, so chains and posterior predictive draws never share
//! state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the pinned generator algorithm, as written in config files.
pub const ALGORITHM: &str = "chacha8";

/// Stream used for observation noise.
pub const NOISE_STREAM: u64 = 0;

/// Stream used for posterior predictive index draws. Chains use streams
/// `0..n_chains`, which stay far below this value.
pub const PREDICTIVE_STREAM: u64 = 0x5050_4300;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
