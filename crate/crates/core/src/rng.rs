//! Seeded, label-addressed random streams.
//!
//! Every consumer of randomness owns a stream identified by `(seed, label)`.
//! The label names the module and the link or jammer it serves, so adding a
//! consumer never shifts the draws seen by another one. A label key can also
//! be split into numbered substreams (one per packet, one per grid point).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// 256-bit ChaCha key derived from a seed and a stream label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn derive(seed: u64, label: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        StreamKey(hasher.finalize().into())
    }

    /// Numbered substream under this key. Substreams are independent ChaCha
    /// streams sharing the key.
    pub fn stream(&self, index: u64) -> RngStream {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(index);
        RngStream { rng }
    }
}

/// Deterministic random stream; identical `(seed, label)` pairs yield
/// identical draw sequences on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        StreamKey::derive(seed, label).stream(0)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
