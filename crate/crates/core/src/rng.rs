//! Seeded random substreams.
//!
//! All randomness flows from one 64-bit master seed. Each independent unit
//! of work (a language pair, a record, a shuffle) gets its own ChaCha8
//! stream keyed by `sha256(master || label || 0x00 || key)`, so results do
//! not depend on scheduling or on how many units ran before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Substream for `(label, key)` under `master`.
pub fn substream(master: u64, label: &str, key: &[u8]) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update([0u8]);
    hasher.update(key);
    let seed: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(seed)
}

/// Substream keyed by a record index.
pub fn indexed(master: u64, label: &str, index: u64) -> StreamRng {
    substream(master, label, &index.to_le_bytes())
}
