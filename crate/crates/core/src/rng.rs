//! The single PRNG used for every seeded decision in the harness.
//!
//! Algorithm: ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`), keyed by
//! `SeedableRng::seed_from_u64`, which expands the 64-bit seed into the
//! 256-bit key with PCG32 (rand_core 0.6). Independent uses of the same seed
//! are separated by ChaCha's 64-bit stream id (see [`Stream`]).
//!
//! Bounded integers are drawn from `next_u64` by rejection sampling
//! (`x < 2^64 - 2^64 mod n`, then `x mod n`), and shuffles are the
//! descending Fisher-Yates walk: for `i` from `len-1` down to `1`, swap
//! `i` with `uniform(0..=i)`. Both are written out here so the exact
//! sequence does not depend on the `rand` crate's internal sampling code.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream ids. Keeping them distinct means a training split and a
/// validation split built from the same seed never share random draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    TrainSplit = 0,
    ValidationSplit = 1,
    KnowledgeShuffle = 2,
    MockGenerator = 3,
}

pub struct HarnessRng {
    inner: ChaCha8Rng,
}

impl HarnessRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream as u64);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    /// Uniform real in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
