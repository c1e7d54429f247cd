//! Instances, timestamped stream events and seeded randomness.
//!
//! Time is measured in instance-index units: instance `i` arrives at time
//! `i` and its label at `i + delay`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random stream handed out by [`RunSeed`].
pub type StreamRng = ChaCha8Rng;

/// One observation of the stream. `label` stays hidden from learners until
/// the matching [`EventKind::LabelArrival`] is processed.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: u64,
    pub features: Vec<f64>,
    pub label: bool,
}

impl Instance {
    pub fn new(id: u64, features: Vec<f64>, label: bool) -> Self {
        Self {
            id,
            features,
            label,
        }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    FeatureArrival,
    LabelArrival,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Features(Vec<f64>),
    Label(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamEvent {
    pub kind: EventKind,
    pub instance_id: u64,
    pub time: u64,
    pub payload: Payload,
}

/// Orders feature and label arrivals into a single event sequence.
///
/// Events are sorted by time. At equal time the feature arrival of the
/// instance arriving at that time comes first, followed by every label due
/// then in ascending instance id. A zero delay therefore delivers the label
/// right after its own features and before the next instance.
pub fn schedule_events(instances: &[Instance], delays: &[i64]) -> Result<Vec<StreamEvent>> {
    if instances.len() != delays.len() {
        return Err(Error::invalid(format!(
            "{} instances but {} delays",
            instances.len(),
            delays.len()
        )));
    }
    for pair in instances.windows(2) {
        if pair[1].id != pair[0].id + 1 {
            return Err(Error::invalid(format!(
                "instance ids must increase by one (found {} after {})",
                pair[1].id, pair[0].id
            )));
        }
    }

    let mut keys = Vec::with_capacity(instances.len() * 2);
    for (pos, (inst, &delay)) in instances.iter().zip(delays).enumerate() {
        if delay < 0 {
            return Err(Error::invalid(format!(
                "negative delay {delay} for instance {}",
                inst.id
            )));
        }
        keys.push((inst.id, EventKind::FeatureArrival, inst.id, pos));
        keys.push((
            inst.id + delay as u64,
            EventKind::LabelArrival,
            inst.id,
            pos,
        ));
    }
    keys.sort_unstable();

    Ok(keys
        .into_iter()
        .map(|(time, kind, instance_id, pos)| {
            let payload = match kind {
                EventKind::FeatureArrival => Payload::Features(instances[pos].features.clone()),
                EventKind::LabelArrival => Payload::Label(instances[pos].label),
            };
            StreamEvent {
                kind,
                instance_id,
                time,
                payload,
            }
        })
        .collect())
}

/// Named random sub-streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Substream {
    Generator,
    Delay,
    Chunking,
    Learner,
    Tuner,
}

impl Substream {
    pub const ALL: [Substream; 5] = [
        Substream::Generator,
        Substream::Delay,
        Substream::Chunking,
        Substream::Learner,
        Substream::Tuner,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Substream::Generator => "generator",
            Substream::Delay => "delay",
            Substream::Chunking => "chunking",
            Substream::Learner => "learner",
            Substream::Tuner => "tuner",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Substream::Generator => 1,
            Substream::Delay => 2,
            Substream::Chunking => 3,
            Substream::Learner => 4,
            Substream::Tuner => 5,
        }
    }
}

impl fmt::Display for Substream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Substream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Substream::ALL
            .into_iter()
            .find(|sub| sub.as_str() == s)
            .ok_or_else(|| Error::UnknownSubstream(s.to_string()))
    }
}

/// Master seed of a run. Every sub-stream is a ChaCha8 key stream keyed by
/// the master seed and selected by a stream id, so draws in one module never
/// shift the draws of another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunSeed {
    pub master_seed: u64,
}

impl RunSeed {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn substream(&self, sub: Substream) -> StreamRng {
        self.indexed(sub, 0)
    }

    /// Independent child stream `index` of `sub`, e.g. one per ensemble
    /// member or per training chunk.
    pub fn indexed(&self, sub: Substream, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream((sub.tag() << 48) | (index & 0xFFFF_FFFF_FFFF));
        rng
    }
}

/// Looks a sub-stream up by its label.
pub fn derive_substream(seed: RunSeed, name: &str) -> Result<StreamRng> {
    Ok(seed.substream(name.parse()?))
}

/// Child seed for components that own their own generator (ensemble
/// members, refits).
pub fn child_seed(rng: &mut impl rand::RngCore) -> u64 {
    rng.next_u64()
}
