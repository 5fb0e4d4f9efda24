//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream derived from
//! the run seed, so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named sub-streams of a run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Topology,
    Problem,
    Constants,
    Dataset,
    Custom(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Topology => 1,
            Stream::Problem => 2,
            Stream::Constants => 3,
            Stream::Dataset => 4,
            Stream::Custom(k) => 1000 + k,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
