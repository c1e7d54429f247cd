//! Chunk plan and the per-chunk feature/prediction/label buffers.

use std::ops::Range;

use rand::Rng;

use crate::batch::{Dataset, LabeledChunk};
use crate::delay::poisson;
use crate::error::{Error, Result};

/// `count` Poisson(`mean`) chunk sizes, each at least 1.
pub fn poisson_sizes(count: usize, mean: f64, rng: &mut impl Rng) -> Vec<usize> {
    (0..count)
        .map(|_| (poisson(rng, mean) as usize).max(1))
        .collect()
}

/// Chunk of `instance_id` given consecutive chunk sizes.
pub fn assign_chunk(instance_id: u64, sizes: &[usize]) -> Option<usize> {
    let mut end = 0u64;
    for (c, &s) in sizes.iter().enumerate() {
        end += s as u64;
        if instance_id < end {
            return Some(c);
        }
    }
    None
}

/// Partition of instance ids `0..n` into consecutive chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    /// `starts[c]` is the first id of chunk `c`; the last entry is `n`.
    starts: Vec<u64>,
}

impl ChunkPlan {
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::invalid("chunk sizes must be positive"));
        }
        let mut starts = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0u64;
        starts.push(0);
        for &s in sizes {
            acc += s as u64;
            starts.push(acc);
        }
        Ok(Self { starts })
    }

    /// About `n / mean` chunks: all but the last have Poisson(`mean`) sizes,
    /// the last takes the remainder.
    pub fn draw(n_instances: usize, mean: f64, rng: &mut impl Rng) -> Result<Self> {
        if !(mean >= 1.0 && mean.is_finite()) {
            return Err(Error::config(format!(
                "chunk mean must be >= 1, got {mean}"
            )));
        }
        if n_instances == 0 {
            return Self::from_sizes(&[]);
        }
        let n_chunks = ((n_instances as f64 / mean).round() as usize).max(1);
        let mut sizes = Vec::with_capacity(n_chunks);
        let mut used = 0usize;
        for s in poisson_sizes(n_chunks - 1, mean, rng) {
            if used + s >= n_instances {
                break;
            }
            sizes.push(s);
            used += s;
        }
        sizes.push(n_instances - used);
        Self::from_sizes(&sizes)
    }

    pub fn n_chunks(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn n_instances(&self) -> u64 {
        *self.starts.last().unwrap()
    }

    pub fn chunk_of(&self, id: u64) -> Option<usize> {
        if id >= self.n_instances() {
            return None;
        }
        Some(self.starts.partition_point(|&s| s <= id) - 1)
    }

    pub fn range(&self, chunk: usize) -> Range<u64> {
        self.starts[chunk]..self.starts[chunk + 1]
    }

    pub fn size(&self, chunk: usize) -> usize {
        (self.starts[chunk + 1] - self.starts[chunk]) as usize
    }

    pub fn sizes(&self) -> Vec<usize> {
        (0..self.n_chunks()).map(|c| self.size(c)).collect()
    }
}

/// Counts over every instance whose features have arrived.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LedgerStats {
    pub seen: usize,
    /// Label not yet arrived.
    pub unlabeled: usize,
    /// Labeled but not yet used for training.
    pub labeled_pending: usize,
    /// Labeled and handed to the learner.
    pub consumed: usize,
    /// Feature vectors held for instances without a label.
    pub unlabeled_features_held: usize,
}

impl LedgerStats {
    pub fn is_conserved(&self) -> bool {
        self.unlabeled + self.labeled_pending + self.consumed == self.seen
    }
}

#[derive(Debug, Clone, Default)]
struct ChunkBuf {
    features: Vec<Option<Vec<f64>>>,
    preds: Vec<Option<f64>>,
    labels: Vec<Option<bool>>,
    received: usize,
}

/// Buffers of Algorithm-1 style evaluation: features, first predictions
/// and labels per chunk, with completion tracking.
#[derive(Debug, Clone)]
pub struct ChunkLedger {
    plan: ChunkPlan,
    bufs: Vec<ChunkBuf>,
    released: Vec<bool>,
    stats: LedgerStats,
}

/// Result of storing a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelReceipt {
    pub chunk: usize,
    pub complete: bool,
}

impl ChunkLedger {
    pub fn new(plan: ChunkPlan) -> Self {
        let n = plan.n_chunks();
        Self {
            plan,
            bufs: vec![ChunkBuf::default(); n],
            released: vec![false; n],
            stats: LedgerStats::default(),
        }
    }

    pub fn plan(&self) -> &ChunkPlan {
        &self.plan
    }

    pub fn stats(&self) -> LedgerStats {
        self.stats
    }

    fn locate(&self, id: u64) -> Result<(usize, usize)> {
        let c = self
            .plan
            .chunk_of(id)
            .ok_or_else(|| Error::Integrity(format!("instance {id} is outside the chunk plan")))?;
        if self.released[c] {
            return Err(Error::Integrity(format!(
                "instance {id} belongs to released chunk {c}"
            )));
        }
        Ok((c, (id - self.plan.range(c).start) as usize))
    }

    fn buf(&mut self, c: usize) -> &mut ChunkBuf {
        let size = self.plan.size(c);
        let b = &mut self.bufs[c];
        if b.preds.is_empty() {
            b.features = vec![None; size];
            b.preds = vec![None; size];
            b.labels = vec![None; size];
        }
        b
    }

    /// Stores the first prediction for `id` and its features.
    pub fn record_prediction(
        &mut self,
        id: u64,
        features: Vec<f64>,
        prediction: f64,
    ) -> Result<()> {
        let (c, k) = self.locate(id)?;
        let b = self.buf(c);
        if b.preds[k].is_some() {
            return Err(Error::Integrity(format!(
                "duplicate feature arrival for instance {id}"
            )));
        }
        b.preds[k] = Some(prediction);
        b.features[k] = Some(features);
        self.stats.seen += 1;
        self.stats.unlabeled += 1;
        self.stats.unlabeled_features_held += 1;
        Ok(())
    }

    /// Stores the label of `id`; errors on unknown ids and duplicates.
    pub fn record_label(&mut self, id: u64, label: bool) -> Result<LabelReceipt> {
        let (c, k) = self
            .locate(id)
            .map_err(|_| Error::Integrity(format!("label for unknown instance {id}")))?;
        let size = self.plan.size(c);
        let b = self.buf(c);
        if b.preds[k].is_none() {
            return Err(Error::Integrity(format!("label for unknown instance {id}")));
        }
        if b.labels[k].is_some() {
            return Err(Error::Integrity(format!(
                "duplicate label for instance {id}"
            )));
        }
        b.labels[k] = Some(label);
        b.received += 1;
        let complete = b.received == size;
        self.stats.unlabeled -= 1;
        self.stats.unlabeled_features_held -= 1;
        self.stats.labeled_pending += 1;
        Ok(LabelReceipt { chunk: c, complete })
    }

    /// Features of a labeled instance, handed to an instance learner and
    /// dropped from the ledger.
    pub fn consume_instance(&mut self, id: u64) -> Result<Vec<f64>> {
        let (c, k) = self.locate(id)?;
        let b = &mut self.bufs[c];
        if b.labels.get(k).copied().flatten().is_none() {
            return Err(Error::Integrity(format!(
                "instance {id} consumed before its label"
            )));
        }
        let x = b.features[k]
            .take()
            .ok_or_else(|| Error::Integrity(format!("instance {id} consumed twice")))?;
        self.stats.labeled_pending -= 1;
        self.stats.consumed += 1;
        Ok(x)
    }

    /// Stored predictions and labels of a complete chunk.
    pub fn scores(&self, chunk: usize) -> (Vec<f64>, Vec<bool>) {
        let b = &self.bufs[chunk];
        let scores = b.preds.iter().map(|p| p.expect("complete chunk")).collect();
        let labels = b
            .labels
            .iter()
            .map(|l| l.expect("complete chunk"))
            .collect();
        (scores, labels)
    }

    /// Moves the labeled rows of a complete chunk out of the ledger.
    pub fn take_labeled(&mut self, chunk: usize) -> LabeledChunk {
        let start = self.plan.range(chunk).start;
        let b = &mut self.bufs[chunk];
        let mut ids = Vec::with_capacity(b.features.len());
        let mut x = Vec::with_capacity(b.features.len());
        let mut y = Vec::with_capacity(b.features.len());
        for (k, f) in b.features.iter_mut().enumerate() {
            if let Some(f) = f.take() {
                ids.push(start + k as u64);
                x.push(f);
                y.push(b.labels[k].expect("complete chunk"));
            }
        }
        self.stats.labeled_pending -= ids.len();
        self.stats.consumed += ids.len();
        LabeledChunk {
            chunk_id: chunk,
            ids,
            data: Dataset { x, y },
        }
    }

    /// Drops every buffer of a finished chunk.
    pub fn release(&mut self, chunk: usize) {
        self.bufs[chunk] = ChunkBuf::default();
        self.released[chunk] = true;
    }

    /// Feature vectors currently held, labeled or not.
    pub fn features_held(&self) -> usize {
        self.bufs
            .iter()
            .map(|b| b.features.iter().filter(|f| f.is_some()).count())
            .sum()
    }

    pub fn is_released(&self, chunk: usize) -> bool {
        self.released[chunk]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{RunSeed, Substream};

    #[test]
    fn assignment_follows_sizes() {
        let sizes = [3, 2];
        let got: Vec<_> = (0..6).map(|i| assign_chunk(i, &sizes)).collect();
        assert_eq!(got, [Some(0), Some(0), Some(0), Some(1), Some(1), None]);
        let plan = ChunkPlan::from_sizes(&sizes).unwrap();
        assert_eq!(
            (0..5)
                .map(|i| plan.chunk_of(i).unwrap())
                .collect::<Vec<_>>(),
            [0, 0, 0, 1, 1]
        );
        assert_eq!(plan.chunk_of(5), None);
    }

    #[test]
    fn drawn_sizes_are_reproducible_and_concentrated() {
        let draw = |seed| {
            poisson_sizes(
                90,
                10_000.0,
                &mut RunSeed::new(seed).substream(Substream::Chunking),
            )
        };
        assert_eq!(draw(3), draw(3));
        let s = draw(3);
        let mean = s.iter().sum::<usize>() as f64 / 90.0;
        assert!((mean - 10_000.0).abs() <= 350.0, "mean {mean}");
    }

    #[test]
    fn plan_covers_stream() {
        let mut rng = RunSeed::new(1).substream(Substream::Chunking);
        let plan = ChunkPlan::draw(90_000, 1000.0, &mut rng).unwrap();
        assert_eq!(plan.n_chunks(), 90);
        assert_eq!(plan.n_instances(), 90_000);
        assert!(plan.sizes().iter().all(|&s| s > 0));
        let tiny = ChunkPlan::draw(5, 1000.0, &mut rng).unwrap();
        assert_eq!(tiny.sizes(), [5]);
    }

    #[test]
    fn integrity_errors() {
        let mut l = ChunkLedger::new(ChunkPlan::from_sizes(&[2, 2]).unwrap());
        l.record_prediction(0, vec![1.0], 0.5).unwrap();
        assert!(matches!(l.record_label(1, true), Err(Error::Integrity(_))));
        assert!(matches!(l.record_label(9, true), Err(Error::Integrity(_))));
        l.record_label(0, true).unwrap();
        assert!(matches!(l.record_label(0, true), Err(Error::Integrity(_))));
        assert!(l.record_prediction(0, vec![1.0], 0.5).is_err());
    }

    #[test]
    fn conservation_through_lifecycle() {
        let mut l = ChunkLedger::new(ChunkPlan::from_sizes(&[2, 1]).unwrap());
        l.record_prediction(0, vec![0.0], 0.1).unwrap();
        l.record_prediction(1, vec![1.0], 0.9).unwrap();
        l.record_prediction(2, vec![2.0], 0.4).unwrap();
        assert!(l.stats().is_conserved());
        assert!(!l.record_label(1, true).unwrap().complete);
        let r = l.record_label(0, false).unwrap();
        assert_eq!(
            r,
            LabelReceipt {
                chunk: 0,
                complete: true
            }
        );
        assert_eq!(l.stats().labeled_pending, 2);
        let (s, y) = l.scores(0);
        assert_eq!((s, y), (vec![0.1, 0.9], vec![false, true]));
        let lc = l.take_labeled(0);
        assert_eq!(lc.ids, [0, 1]);
        assert_eq!(lc.data.y, [false, true]);
        l.release(0);
        let st = l.stats();
        assert!(st.is_conserved());
        assert_eq!((st.unlabeled, st.labeled_pending, st.consumed), (1, 0, 2));
        assert_eq!(l.features_held(), 1);
        assert!(l.record_label(0, true).is_err());
    }
}
