//! Seedable random number generator shared by every stochastic component.
//!
//! The stream is xoshiro256** seeded through SplitMix64, so a seed yields the
//! same sequence on every platform. Floating draws use the high 53 bits.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    seed: u64,
    inner: Xoshiro256StarStar,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// The seed this generator was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn rand(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw over `0..high`. Panics when `high == 0`.
    pub fn randint(&mut self, high: usize) -> usize {
        assert!(high > 0, "randint called with an empty range");
        let high = high as u64;
        // Rejection sampling keeps the draw unbiased.
        let zone = u64::MAX - (u64::MAX % high);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % high) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle driven by `randint`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.randint(i + 1);
            items.swap(i, j);
        }
    }

    /// Derives an independent generator for a numbered sub-stream.
    ///
    /// Child seeds depend only on the parent seed and the stream id, never on
    /// how far the parent has advanced.
    pub fn child(&self, stream: u64) -> Rng {
        Rng::new(derive_seed(self.seed, stream))
    }
}

/// SplitMix64 mix of `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
