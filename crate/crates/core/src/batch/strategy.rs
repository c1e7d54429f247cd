//! Chunk-update strategies for batch learners.

use std::collections::VecDeque;
use std::fmt;

use super::cart::{CartModel, CartParams};
use super::gbdt::{GbdtModel, GbdtParams};
use super::linear::{LinearModel, LinearParams};
use super::{BatchTrainer, Dataset, LabeledChunk};
use crate::error::{Error, Result};
use crate::stream::{RunSeed, Substream};

pub const TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Cart(CartParams),
    Gbdt(GbdtParams),
    Linear(LinearParams),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Cart(_) => "cart",
            ModelSpec::Gbdt(_) => "gbdt",
            ModelSpec::Linear(_) => "linear",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Cart(p) => p.validate(),
            ModelSpec::Gbdt(p) => p.validate(),
            ModelSpec::Linear(p) => p.validate(),
        }
    }

    /// Fits on the training part of a stratified 70/30 split of `data`.
    pub fn fit(&self, data: &Dataset, seed: RunSeed, split_index: u64) -> Result<BatchModel> {
        let mut rng = seed.indexed(Substream::Learner, split_index);
        let (train, val) = data.stratified_split(TRAIN_FRACTION, &mut rng);
        self.fit_split(&train, &val)
    }

    pub fn fit_split(&self, train: &Dataset, val: &Dataset) -> Result<BatchModel> {
        Ok(match self {
            ModelSpec::Cart(p) => BatchModel::Cart(CartModel::fit(train, *p)?),
            ModelSpec::Gbdt(p) => BatchModel::Gbdt(GbdtModel::fit(train, val, *p)?),
            ModelSpec::Linear(p) => BatchModel::Linear(LinearModel::fit(train, *p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BatchModel {
    Cart(CartModel),
    Gbdt(GbdtModel),
    Linear(LinearModel),
}

impl BatchModel {
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        match self {
            BatchModel::Cart(m) => m.predict_proba(x),
            BatchModel::Gbdt(m) => m.predict_proba(x),
            BatchModel::Linear(m) => m.predict_proba(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Keep the pretrained model.
    Static,
    /// Refit from scratch on each new chunk.
    Retrain,
    /// Retrain and average the last `members` models.
    Stack { members: usize },
    /// Refit on the union of the last `chunks` labeled chunks.
    Propagate { chunks: usize },
    /// Gradient updates of a linear model on each new chunk.
    FineTune,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::Static => f.write_str("static"),
            StrategyKind::Retrain => f.write_str("retrain"),
            StrategyKind::Stack { members } => write!(f, "stack{members}"),
            StrategyKind::Propagate { chunks } => write!(f, "propagate{chunks}"),
            StrategyKind::FineTune => f.write_str("finetune"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Strategy {
    kind: StrategyKind,
    spec: ModelSpec,
    seed: RunSeed,
    members: VecDeque<BatchModel>,
    window: VecDeque<LabeledChunk>,
    steps: u64,
}

impl Strategy {
    pub fn new(kind: StrategyKind, spec: ModelSpec, seed: RunSeed) -> Result<Self> {
        spec.validate()?;
        match kind {
            StrategyKind::Stack { members: 0 } => {
                return Err(Error::config("stack needs at least one member"))
            }
            StrategyKind::Propagate { chunks: 0 } => {
                return Err(Error::config(
                    "propagate needs a window of at least one chunk",
                ))
            }
            StrategyKind::FineTune if !matches!(spec, ModelSpec::Linear(_)) => {
                return Err(Error::config(format!(
                    "fine-tuning needs a gradient-trainable model, got {}",
                    spec.name()
                )))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            spec,
            seed,
            members: VecDeque::new(),
            window: VecDeque::new(),
            steps: 0,
        })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    /// Fits the initial model on the offline reserve.
    pub fn pretrain(&mut self, data: &Dataset) -> Result<()> {
        let model = self.spec.fit(data, self.seed, 0)?;
        self.members = VecDeque::from([model]);
        Ok(())
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> impl Iterator<Item = &BatchModel> {
        self.members.iter()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Chunk ids currently in the propagation window, oldest first.
    pub fn window_ids(&self) -> Vec<usize> {
        self.window.iter().map(|c| c.chunk_id).collect()
    }

    fn fit_chunk(&self, data: &Dataset, chunk_id: usize) -> Result<BatchModel> {
        self.spec.fit(data, self.seed, chunk_id as u64 + 1)
    }
}

impl BatchTrainer for Strategy {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if self.members.is_empty() {
            return Ok(0.5);
        }
        let mut sum = 0.0;
        for m in &self.members {
            sum += m.predict_proba(x)?;
        }
        Ok(sum / self.members.len() as f64)
    }

    fn step(&mut self, chunk: LabeledChunk) -> Result<()> {
        if chunk.data.is_empty() {
            return Ok(());
        }
        match self.kind {
            StrategyKind::Static => {}
            StrategyKind::Retrain => {
                let m = self.fit_chunk(&chunk.data, chunk.chunk_id)?;
                self.members = VecDeque::from([m]);
            }
            StrategyKind::Stack { members } => {
                let m = self.fit_chunk(&chunk.data, chunk.chunk_id)?;
                if self.steps == 0 {
                    self.members.clear();
                }
                self.members.push_back(m);
                while self.members.len() > members {
                    self.members.pop_front();
                }
            }
            StrategyKind::Propagate { chunks } => {
                let newest = chunk.chunk_id;
                self.window.push_back(chunk);
                while self.window.len() > chunks {
                    self.window.pop_front();
                }
                let mut union = Dataset::default();
                for c in &self.window {
                    union.extend(&c.data);
                }
                let m = self.fit_chunk(&union, newest)?;
                self.members = VecDeque::from([m]);
            }
            StrategyKind::FineTune => match self.members.front_mut() {
                Some(BatchModel::Linear(m)) => m.fine_tune(&chunk.data)?,
                _ => {
                    let m = self.fit_chunk(&chunk.data, chunk.chunk_id)?;
                    self.members = VecDeque::from([m]);
                }
            },
        }
        self.steps += 1;
        Ok(())
    }

    fn retained_chunks(&self) -> usize {
        self.window.len()
    }
}
