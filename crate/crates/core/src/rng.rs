//! Deterministic random-number substreams.
//!
//! All randomness in an experiment flows from one 64-bit seed. Independent
//! Monte Carlo cells get their own named substream so results do not depend
//! on scheduling or iteration order: `substream(seed, &["budget", "bell"], i)`
//! always yields the same generator.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::{Digest, Sha256};

/// Derive a deterministic substream from a master seed, a tag path and an
/// index. The derivation hashes all parts, so distinct tags never collide
/// by accidental concatenation.
pub fn substream(seed: u64, tags: &[&str], index: u64) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for t in tags {
        h.update([0xff]);
        h.update(t.as_bytes());
    }
    h.update([0xfe]);
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}

/// Draw an index from a discrete distribution given by non-negative weights.
/// Weights need not be normalized. Returns the last index with nonzero
/// weight if rounding pushes the accumulated sum below the draw.
pub fn categorical(rng: &mut impl rand::Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "categorical draw from all-zero weights");
    let mut u = rng.random::<f64>() * total;
    let mut last_nonzero = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_nonzero = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last_nonzero
}
