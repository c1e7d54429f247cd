//! Synthetic drifting streams and CSV replay.

mod agrawal;
mod csv_replay;
mod hyperplane;
mod rare_event;
mod sea;

pub use agrawal::{agrawal_function, AgrawalAttributes, AgrawalConfig, AgrawalGenerator};
pub use csv_replay::{csv_replay, CsvSchema, CsvStream};
pub use hyperplane::{hyperplane_label, HyperplaneConfig, HyperplaneGenerator};
pub use rare_event::{RareEventConfig, RareEventGenerator};
pub use sea::{sea_label, SeaConfig, SeaGenerator, SEA_THRESHOLDS};

use rand::Rng;

use crate::error::{Error, Result};
use crate::stream::{Instance, RunSeed, Substream};

/// A seeded, sequential instance source. Instance ids start at 0.
pub trait StreamGenerator: Send {
    fn dim(&self) -> usize;

    fn next_instance(&mut self) -> Instance;

    fn take_instances(&mut self, n: usize) -> Vec<Instance> {
        (0..n).map(|_| self.next_instance()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftKind {
    Abrupt,
    /// Sigmoid transition of the given width (instances) around each
    /// change point.
    Gradual {
        width: f64,
    },
}

/// Concept sequence over the stream; `concepts.len() == change_points.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSchedule<C> {
    change_points: Vec<u64>,
    concepts: Vec<C>,
    kind: DriftKind,
}

impl<C: Copy> DriftSchedule<C> {
    pub fn new(change_points: Vec<u64>, concepts: Vec<C>, kind: DriftKind) -> Result<Self> {
        if concepts.len() != change_points.len() + 1 {
            return Err(Error::config(format!(
                "drift schedule needs {} concepts for {} change points, got {}",
                change_points.len() + 1,
                change_points.len(),
                concepts.len()
            )));
        }
        if change_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("change points must be strictly increasing"));
        }
        if let DriftKind::Gradual { width } = kind {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::config(format!(
                    "gradual window width must be > 0, got {width}"
                )));
            }
        }
        Ok(Self {
            change_points,
            concepts,
            kind,
        })
    }

    pub fn stationary(concept: C) -> Self {
        Self {
            change_points: Vec::new(),
            concepts: vec![concept],
            kind: DriftKind::Abrupt,
        }
    }

    /// Evenly spaced change points every `every` instances.
    pub fn every(every: u64, concepts: Vec<C>, kind: DriftKind) -> Result<Self> {
        let cps = (1..concepts.len() as u64).map(|k| k * every).collect();
        Self::new(cps, concepts, kind)
    }

    pub fn change_points(&self) -> &[u64] {
        &self.change_points
    }

    pub fn concepts(&self) -> &[C] {
        &self.concepts
    }

    pub fn kind(&self) -> DriftKind {
        self.kind
    }

    /// Index into `concepts` of the concept nominally active at `t`
    /// (ignores the gradual mixing).
    pub fn segment(&self, t: u64) -> usize {
        self.change_points.partition_point(|&cp| cp <= t)
    }

    /// Concept used to label instance `t`. Gradual drift consumes one
    /// uniform draw per change point; abrupt drift draws nothing.
    pub fn concept_at(&self, t: u64, rng: &mut impl Rng) -> C {
        match self.kind {
            DriftKind::Abrupt => self.concepts[self.segment(t)],
            DriftKind::Gradual { width } => {
                let mut chosen = self.concepts[0];
                let mut decided = false;
                for (j, &cp) in self.change_points.iter().enumerate().rev() {
                    let u: f64 = rng.gen();
                    if !decided && u < gradual_mix(t as f64, cp as f64, width) {
                        chosen = self.concepts[j + 1];
                        decided = true;
                    }
                }
                chosen
            }
        }
    }
}

/// Probability of drawing the incoming concept at time `t` for a change
/// centred on `t0` with transition width `width`.
pub fn gradual_mix(t: f64, t0: f64, width: f64) -> f64 {
    1.0 / (1.0 + (-4.0 * (t - t0) / width).exp())
}

/// Builds a generator rng for a run.
pub(crate) fn generator_rng(seed: RunSeed) -> crate::stream::StreamRng {
    seed.substream(Substream::Generator)
}
