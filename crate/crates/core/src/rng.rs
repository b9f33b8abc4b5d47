//! Counter-based random streams.
//!
//! A master seed keys a ChaCha8 generator; every trial (or sampling chunk)
//! gets its own stream, selected by the ChaCha nonce. Draws for trial `k`
//! therefore depend only on `(master_seed, k)`, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct StreamSeeder {
    base: ChaCha8Rng,
}

impl StreamSeeder {
    pub fn new(master_seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(master_seed),
        }
    }

    /// Independent generator for stream `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }
}
