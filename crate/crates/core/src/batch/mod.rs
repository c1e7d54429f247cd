//! Batch learners and the chunk-update strategies that drive them.

mod cart;
mod gbdt;
mod linear;
mod strategy;

pub use cart::{CartModel, CartParams};
pub use gbdt::{GbdtModel, GbdtParams, QuantileBins};
pub use linear::{LinearModel, LinearParams};
pub use strategy::{BatchModel, ModelSpec, Strategy, StrategyKind, TRAIN_FRACTION};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A labeled batch of rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<bool>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<bool>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        if let Some(first) = x.first() {
            let p = first.len();
            if let Some(bad) = x.iter().find(|r| r.len() != p) {
                return Err(Error::Dimension {
                    expected: p,
                    got: bad.len(),
                });
            }
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&y| y).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn extend(&mut self, other: &Dataset) {
        self.x.extend(other.x.iter().cloned());
        self.y.extend_from_slice(&other.y);
    }

    /// Stratified split: within each class a shuffled `train_fraction` goes
    /// to the first set (rounded), the rest to the second. Row order inside
    /// each part follows the original order.
    pub fn stratified_split(&self, train_fraction: f64, rng: &mut impl Rng) -> (Dataset, Dataset) {
        let mut train = Vec::with_capacity(self.len());
        let mut val = Vec::with_capacity(self.len());
        for class in [false, true] {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.y[i] == class).collect();
            idx.shuffle(rng);
            let k = (idx.len() as f64 * train_fraction).round() as usize;
            train.extend_from_slice(&idx[..k]);
            val.extend_from_slice(&idx[k..]);
        }
        train.sort_unstable();
        val.sort_unstable();
        (self.subset(&train), self.subset(&val))
    }
}

/// Labeled content of one completed chunk, handed to a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledChunk {
    pub chunk_id: usize,
    pub ids: Vec<u64>,
    pub data: Dataset,
}

/// A batch learner as seen by the evaluation harness.
pub trait BatchTrainer: Send {
    fn predict_proba(&self, x: &[f64]) -> Result<f64>;

    /// Consumes a newly completed labeled batch.
    fn step(&mut self, chunk: LabeledChunk) -> Result<()>;

    /// Labeled chunks currently held for future training.
    fn retained_chunks(&self) -> usize {
        0
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Dimension {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{RunSeed, Substream};

    #[test]
    fn split_is_stratified_and_disjoint() {
        let x: Vec<Vec<f64>> = (0..1000).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..1000).map(|i| i % 20 == 0).collect();
        let d = Dataset::new(x, y).unwrap();
        let mut rng = RunSeed::new(1).substream(Substream::Learner);
        let (tr, va) = d.stratified_split(0.7, &mut rng);
        assert_eq!(tr.len() + va.len(), 1000);
        assert_eq!(tr.positives(), 35);
        assert_eq!(va.positives(), 15);
        let mut all: Vec<f64> = tr.x.iter().chain(va.x.iter()).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        assert_eq!(all.len(), 1000);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![true, false]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![]).is_err());
    }
}
