//! Seeded, stream-addressable random number generation.
//!
//! Every stochastic stage of the pipeline draws from an [`RngStream`]
//! keyed by `(seed, stream_id)`. One top-level seed then reproduces a
//! whole run: stages derive their stream ids from stable string/number
//! hashes instead of sharing a generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// A deterministic pseudo-random stream.
///
/// Streams with distinct `(seed, stream_id)` pairs are statistically
/// independent. A stream is a single-owner object: move it between
/// threads freely, but do not share one concurrently.
pub struct RngStream {
    inner: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream { inner }
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in 0..n.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        self.inner.random_range(0..n)
    }

    /// Fair coin flip.
    pub fn flip(&mut self) -> bool {
        self.inner.random::<bool>()
    }
}

/// FNV-1a hash over the byte chunks, used to derive stream ids from
/// labels and loop counters. Stable across platforms and releases.
pub fn stream_id(parts: &[&[u8]]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for part in parts {
        for &byte in *part {
            h ^= u64::from(byte);
            h = h.wrapping_mul(PRIME);
        }
        // Separator so ("ab","c") and ("a","bc") differ.
        h ^= 0xff;
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Stream id for a labeled stage plus an integer coordinate.
pub fn labeled_stream_id(stage: &str, label: &str, index: i64) -> u64 {
    stream_id(&[stage.as_bytes(), label.as_bytes(), &index.to_le_bytes()])
}
