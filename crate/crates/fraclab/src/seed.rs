//! Deterministic stream seeding.
//!
//! Every random quantity in the crate is drawn from a ChaCha12 stream
//! addressed by `(master_seed, stream index)`. Streams with different
//! indices are statistically independent, and the mapping is pure, so any
//! trajectory can be regenerated from its coordinates alone regardless of
//! how many threads produced the batch.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedScheme {
    pub master_seed: u64,
}

impl SeedScheme {
    pub fn new(master_seed: u64) -> Self {
        SeedScheme { master_seed }
    }

    /// The generator for stream `index` under this master seed.
    pub fn stream(&self, index: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }

    /// A derived scheme for an unrelated purpose (training data vs.
    /// validation data, say), so that both sides can use small stream
    /// indices without colliding.
    pub fn child(&self, purpose: u64) -> SeedScheme {
        SeedScheme {
            master_seed: splitmix64(self.master_seed ^ splitmix64(purpose)),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
