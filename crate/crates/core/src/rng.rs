//! Seeded random streams.
//!
//! Every sampler draws from ChaCha8 seeded with a user seed. Independent
//! streams (chains, replicates) share the seed and differ in the ChaCha
//! stream id, so results do not depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed fallback when none is configured.
pub const DEFAULT_SEED: u64 = 20190101;
