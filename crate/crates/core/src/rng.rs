//! Deterministic random streams.
//!
//! Everything stochastic in this crate draws from a [`Stream`]: ChaCha8 keyed
//! by a 64-bit seed, with uniform doubles produced by the explicit 53-bit
//! mapping below. That keeps results bit-identical across platforms and
//! independent of any distribution code elsewhere.
//!
//! Independent sub-streams are derived, never split positionally: a root seed
//! plus a tag path is folded through a SplitMix64 finalizer
//! ([`derive_seed`]), so replicate 17 of experiment 3 always sees the same
//! stream no matter how many threads ran replicates 0..16.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer; good 64-bit avalanche for seed derivation.
#[must_use]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a root seed and a tag path.
///
/// Tags name the consumer (experiment id, replicate index, stream role);
/// distinct paths give statistically independent streams.
#[must_use]
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    let mut h = mix(root);
    for &t in tags {
        h = mix(h ^ mix(t));
    }
    h
}

/// A seeded, portable random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
    seed: u64,
}

impl Stream {
    /// Stream keyed directly by `seed`.
    #[must_use]
    pub fn new(seed: u64) -> Self {
        Stream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// Stream keyed by `derive_seed(root, tags)`.
    #[must_use]
    pub fn derived(root: u64, tags: &[u64]) -> Self {
        Stream::new(derive_seed(root, tags))
    }

    /// The seed this stream was keyed with (for embedding in reports).
    #[must_use]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on [0, 1): top 53 bits of one u64.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [-1, 1).
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }

    /// Uniform on [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform index in 0..n, unbiased (rejection sampling).
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() needs a nonempty range");
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller (two fresh uniforms per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.unit();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Stream::new(42);
        let mut b = Stream::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derived_streams_differ_by_tag() {
        let s0: Vec<u64> = {
            let mut s = Stream::derived(1, &[7, 0]);
            (0..8).map(|_| s.next_u64()).collect()
        };
        let s1: Vec<u64> = {
            let mut s = Stream::derived(1, &[7, 1]);
            (0..8).map(|_| s.next_u64()).collect()
        };
        assert_ne!(s0, s1);
        // and the derivation itself is stable
        assert_eq!(derive_seed(1, &[7, 0]), derive_seed(1, &[7, 0]));
    }

    #[test]
    fn unit_is_in_half_open_interval() {
        let mut s = Stream::new(3);
        for _ in 0..10_000 {
            let u = s.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn symmetric_spans_both_signs() {
        let mut s = Stream::new(4);
        let draws: Vec<f64> = (0..1000).map(|_| s.symmetric()).collect();
        assert!(draws.iter().all(|u| (-1.0..1.0).contains(u)));
        assert!(draws.iter().any(|&u| u < -0.5));
        assert!(draws.iter().any(|&u| u > 0.5));
    }

    #[test]
    fn index_covers_range_uniformly_enough() {
        let mut s = Stream::new(5);
        let mut counts = [0usize; 7];
        for _ in 0..7000 {
            counts[s.index(7)] += 1;
        }
        for &c in &counts {
            // expected 1000 per bin; loose sanity bound
            assert!((700..1300).contains(&c), "bin count {c} out of range");
        }
    }

    #[test]
    fn normal_has_plausible_moments() {
        let mut s = Stream::new(6);
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
