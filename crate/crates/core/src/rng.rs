//! Seeded random streams.
//!
//! Everything stochastic in the crate draws from ChaCha8 so runs are
//! reproducible across platforms. Independent streams of the same seed are
//! used to give every evaluation game its own generator, which keeps results
//! identical no matter how games are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for item `index` of a seeded family.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
