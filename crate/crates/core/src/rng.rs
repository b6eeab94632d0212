//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by a 64-bit hash of
//! `(seed, path...)`. ChaCha is a counter-mode generator, so a stream is a
//! pure function of its key and position, and sub-streams for cities,
//! replicates or permutations never depend on evaluation order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::special::normal_quantile_fast;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a seed and a path of indices into a stream key.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for (depth, &p) in path.iter().enumerate() {
        let salt = GOLDEN.wrapping_mul(depth as u64 + 2);
        h = mix64(h ^ mix64(p.wrapping_add(salt)));
    }
    h
}

#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self::derive(seed, &[])
    }

    /// Independent sub-stream addressed by `path`.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(derive_key(seed, path)) }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate by inverse-CDF transform.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        normal_quantile_fast(self.uniform_open())
    }

    /// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.inner.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
