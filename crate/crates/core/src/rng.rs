//! Seed splitting.
//!
//! Every random quantity in a run is drawn from a ChaCha8 stream whose seed is
//! derived from the root seed, a named stream and an index. Streams never
//! depend on the number of workers, so results are identical for any pool
//! size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Identifier recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8/splitmix64";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Diffusion = 1,
    Trials = 2,
    OptLower = 3,
    Collection = 4,
    Evaluation = 5,
    SeedSelection = 6,
    ActivationOrder = 7,
    Probabilities = 8,
    TupleActivation = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of `stream[index]` under `root`.
pub fn derive(root: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ splitmix64(stream as u64)).wrapping_add(splitmix64(index)))
}

pub fn stream_rng(root: u64, stream: Stream, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive(root, stream, index))
}

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
