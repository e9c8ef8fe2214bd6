//! Seedable, forkable random source for tree sampling.
//!
//! Every draw goes through inverse-CDF transforms of a single uniform stream
//! so sampled trees are reproducible across platforms. Per-tree streams are
//! derived from `(seed, tree_index)` via ChaCha stream selection, which keeps
//! forests deterministic regardless of the order in which trees are built.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngState { seed, stream, rng }
    }

    /// Independent child stream for tree `index`; does not advance `self`.
    pub fn fork(&self, index: u64) -> Self {
        // stream 0 belongs to the parent itself
        Self::with_stream(self.seed, index.wrapping_add(1))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform sample on `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Exponential waiting time with the given rate, by inversion.
    pub fn exp_draw(&mut self, rate: f64) -> Result<f64> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidRate(rate));
        }
        let u = self.next_unit();
        Ok(-(-u).ln_1p() / rate)
    }

    /// Uniform sample on `[lo, hi)`; returns `lo` when the interval is a point.
    pub fn uniform_draw(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInterval { lo, hi });
        }
        if lo == hi {
            return Ok(lo);
        }
        let x = lo + self.next_unit() * (hi - lo);
        // rounding can land exactly on `hi`
        Ok(if x >= hi { hi.next_down().max(lo) } else { x })
    }

    /// Index drawn with probability proportional to `weights`.
    pub fn categorical_proportional(&mut self, weights: &[f64]) -> Result<usize> {
        let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NoValidDimension);
        }
        let target = self.next_unit() * total;
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last = i;
                if target < acc {
                    return Ok(i);
                }
            }
        }
        Ok(last)
    }
}

#[derive(Serialize, Deserialize)]
struct RngRepr {
    seed: u64,
    stream: u64,
    word_pos: u128,
}

impl Serialize for RngState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RngRepr {
            seed: self.seed,
            stream: self.stream,
            word_pos: self.rng.get_word_pos(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RngState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = RngRepr::deserialize(deserializer)?;
        let mut state = RngState::with_stream(repr.seed, repr.stream);
        state.rng.set_word_pos(repr.word_pos);
        Ok(state)
    }
}
