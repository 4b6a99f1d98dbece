//! Seeded spin sources.
//!
//! Every trial draws from its own ChaCha8 stream selected by
//! `(master seed, trial index)`, so serial and parallel runs see the same
//! outcomes. Spins consume two fresh bits each from a buffered 64-bit word.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::SpinOutcome;

/// Deterministic per-trial random stream.
#[derive(Debug, Clone)]
pub struct SpinRng {
    inner: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl SpinRng {
    /// Stream `index` of the generator family keyed by `seed`.
    pub fn for_trial(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        Self {
            inner,
            bits: 0,
            left: 0,
        }
    }

    pub fn new(seed: u64) -> Self {
        Self::for_trial(seed, 0)
    }

    /// Two uniform bits, never reused.
    #[inline]
    pub fn two_bits(&mut self) -> u8 {
        if self.left == 0 {
            self.bits = self.inner.next_u64();
            self.left = 32;
        }
        let out = (self.bits & 3) as u8;
        self.bits >>= 2;
        self.left -= 1;
        out
    }

    #[inline]
    pub fn spin(&mut self) -> SpinOutcome {
        SpinOutcome::from_bits(self.two_bits())
    }

    /// Uniform index in `0..bound` (rejection sampled, `bound >= 1`).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound >= 1);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}
