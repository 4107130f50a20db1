//! Reproducible random streams.
//!
//! A [`RngStream`] is an immutable `(seed, stream_id)` descriptor. Its
//! generator is ChaCha8 keyed by `seed` (expanded to 256 bits with the PCG32
//! procedure of `SeedableRng::seed_from_u64`) and positioned on ChaCha stream
//! `stream_id`. ChaCha output is specified bit-for-bit, so a descriptor
//! yields the same draws on every platform.
//!
//! Bounded integers use Lemire's widening-multiply method with rejection,
//! implemented here rather than borrowed so the mapping from raw `u64`
//! words to indices is pinned.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn generator(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        StreamRng(rng)
    }

    /// A descriptor for an independent family of streams, keyed by this one
    /// and `label`. Used to give each Monte Carlo replication its own seed.
    pub fn derive(&self, label: u64) -> RngStream {
        let mixed = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(splitmix64(label))));
        RngStream::new(mixed, 0)
    }
}

/// SplitMix64 finalizer.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A positioned generator drawn from an [`RngStream`].
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    /// Uniform index in `[0, n)`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.0.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
}

/// `k` uniform draws from `[0, n)` on the given stream.
pub fn rng_draw_uniform_indices(stream: RngStream, n: usize, k: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(invalid("cannot draw indices from an empty range"));
    }
    let mut rng = stream.generator();
    Ok((0..k).map(|_| rng.index(n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_range() {
        assert_eq!(rng_draw_uniform_indices(RngStream::new(1, 2), 1, 5).unwrap(), vec![0; 5]);
    }

    #[test]
    fn deterministic_and_stream_separated() {
        let a = rng_draw_uniform_indices(RngStream::new(42, 7), 1000, 50).unwrap();
        let b = rng_draw_uniform_indices(RngStream::new(42, 7), 1000, 50).unwrap();
        let c = rng_draw_uniform_indices(RngStream::new(42, 8), 1000, 50).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn frozen_prefix() {
        // Pins the ChaCha8 keying and the index mapping across releases.
        let draws = rng_draw_uniform_indices(RngStream::new(2024, 3), 1_000_000, 4).unwrap();
        assert_eq!(draws, FROZEN);
    }
    const FROZEN: [usize; 4] = [20334, 259764, 721156, 781185];

    #[test]
    fn empirically_uniform() {
        let n = 10;
        let k = 1_000_000;
        let draws = rng_draw_uniform_indices(RngStream::new(9, 0), n, k).unwrap();
        let mut counts = vec![0usize; n];
        for d in draws {
            counts[d] += 1;
        }
        let expected = k as f64 / n as f64;
        let sigma = (k as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 4.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn empty_range_is_rejected() {
        assert!(rng_draw_uniform_indices(RngStream::new(0, 0), 0, 1).is_err());
    }
}
