//! Counter-based, splittable 64-bit random number generation.
//!
//! A stream is identified by a 64-bit `key`. The i-th output (i = 1, 2, ...)
//! is
//!
//! ```text
//! output(key, i) = mix64(key + i * GAMMA)        (wrapping arithmetic)
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer and `GAMMA` the 64-bit golden
//! ratio constant. The state transition is just `i += 1`, so any output can
//! be computed directly from `(key, i)` and the sequence is identical on
//! every platform. Child streams are derived with [`CounterRng::split`],
//! which hashes the parent key together with a tag; siblings with different
//! tags are statistically independent and unaffected by how far the parent
//! has advanced.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes an ordered tuple of words into one 64-bit seed.
pub fn mix_seed(words: &[u64]) -> u64 {
    let mut h = mix64(0x5350_4152_5345_5048); // arbitrary domain constant
    for (i, &w) in words.iter().enumerate() {
        h = mix64(h ^ mix64(w.wrapping_add(GAMMA.wrapping_mul(i as u64 + 1))));
        h = h.wrapping_add(GAMMA);
    }
    mix64(h)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x6A09_E667_F3BC_C908),
            counter: 0,
        }
    }

    /// Stream with an explicit key, e.g. one obtained from [`Self::split`].
    pub fn from_key(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Independent child stream for `tag`. Does not advance `self`.
    pub fn split(&self, tag: u64) -> CounterRng {
        CounterRng {
            key: mix64(self.key ^ mix64(tag.wrapping_mul(GAMMA) ^ 0xBB67_AE85_84CA_A73B)),
            counter: 0,
        }
    }

    /// Output at an arbitrary position without touching the counter.
    #[inline]
    pub fn at(&self, index: u64) -> u64 {
        mix64(self.key.wrapping_add(index.wrapping_mul(GAMMA)))
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        self.at(self.counter)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform_open_closed(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Uniform integer in `0..bound` (Lemire's method, unbiased).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_word() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    /// First `k` entries of a uniformly random permutation of `0..n`
    /// (partial Fisher–Yates).
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_word() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_word()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
