//! Random undersampling of the negative class.

use rand::{Rng, SeedableRng};

use super::OnlineLearner;
use crate::error::{Error, Result};
use crate::stream::StreamRng;

/// Forwards every positive and each negative with probability `keep_negative`.
#[derive(Debug, Clone)]
pub struct Undersample<L> {
    inner: L,
    keep_negative: f64,
    rng: StreamRng,
    forwarded: [u64; 2],
}

impl<L: OnlineLearner> Undersample<L> {
    pub fn new(inner: L, keep_negative: f64, seed: u64) -> Result<Self> {
        if !(keep_negative > 0.0 && keep_negative <= 1.0) {
            return Err(Error::config(format!(
                "undersampling keep probability must be in (0, 1], got {keep_negative}"
            )));
        }
        Ok(Self {
            inner,
            keep_negative,
            rng: StreamRng::seed_from_u64(seed),
            forwarded: [0; 2],
        })
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    /// Instances passed to the wrapped learner, by class.
    pub fn forwarded(&self) -> [u64; 2] {
        self.forwarded
    }
}

impl<L: OnlineLearner> OnlineLearner for Undersample<L> {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.inner.predict_proba(x)
    }

    fn learn_weighted(&mut self, x: &[f64], y: bool, weight: u32) -> Result<()> {
        if y || self.keep_negative >= 1.0 || self.rng.gen::<f64>() < self.keep_negative {
            self.forwarded[y as usize] += 1;
            self.inner.learn_weighted(x, y, weight)
        } else {
            Ok(())
        }
    }
}
