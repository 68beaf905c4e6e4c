//! Seeded random streams.
//!
//! Every source of randomness is a ChaCha20 generator whose 256-bit key is
//! `SHA-256(seed_le || tag || 0x00 || index_le)`. Components ask for a stream
//! by tag (`"env"`, `"warmup"`, `"episode"`, `"noise"`, `"select"`, ...) and an
//! index (usually the episode number), so replicas and components never share
//! generator state and results are bit-reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha20Rng;

/// Derives independent, named random streams from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, tag: &str, index: u64) -> StreamRng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(tag.as_bytes());
        hasher.update([0u8]);
        hasher.update(index.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha20Rng::from_seed(key)
    }

    /// A child stream family, e.g. one per replica of a seed sweep.
    pub fn child(&self, tag: &str, index: u64) -> Streams {
        use rand::RngCore;
        Streams::new(self.stream(tag, index).next_u64())
    }
}
