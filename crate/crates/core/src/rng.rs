//! Seeded random streams.
//!
//! Every stochastic consumer (rollouts, branches, random gates, random
//! triggers) draws from its own substream keyed by a tag path, so results do
//! not depend on scheduling order or on which strategy is being trained.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Domain tags that keep substreams of different consumers apart.
pub mod tag {
    pub const ROLLOUT: u64 = 1;
    pub const BRANCH: u64 = 2;
    pub const RANDOM_CASE: u64 = 3;
    pub const RANDOM_TRIGGER: u64 = 4;
    pub const EVAL: u64 = 5;
    pub const TASK: u64 = 6;
    pub const INIT: u64 = 7;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, path)`.
pub fn substream(seed: u64, path: &[u64]) -> Rng {
    let stream = path
        .iter()
        .fold(0x5EED_u64, |acc, &t| splitmix(acc ^ splitmix(t)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
