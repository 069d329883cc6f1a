//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! `(seed, stream id)`. Streams are independent of each other and of thread
//! scheduling, so a component can be re-seeded without perturbing the rest.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named substreams derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Stream {
    Init = 1,
    Sampling = 2,
    Partition = 3,
    Subsample = 4,
    TestSampling = 5,
}

/// Generator for `(seed, stream, index)`; `index` distinguishes e.g. layers
/// or clients within one named stream.
pub fn stream(seed: u64, kind: Stream, index: u32) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 32) | index as u64);
    rng
}
