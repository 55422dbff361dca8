//! Seeded random streams.
//!
//! Every randomized routine takes a `(seed, stream)` pair; replicate `i` of a
//! Monte Carlo batch always reads stream `i`, so results do not depend on how
//! the work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
