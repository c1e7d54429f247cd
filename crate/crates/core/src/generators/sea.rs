//! SEA concepts: three uniform features on [0, 10], class 1 iff
//! `x1 + x2 <= theta`, then symmetric label noise.

use rand::Rng;

use super::{generator_rng, DriftSchedule, StreamGenerator};
use crate::error::{Error, Result};
use crate::stream::{Instance, RunSeed, StreamRng};

/// Thresholds of the four benchmark concepts, in order.
pub const SEA_THRESHOLDS: [f64; 4] = [8.0, 9.0, 7.0, 9.5];

pub fn sea_label(x1: f64, x2: f64, theta: f64) -> bool {
    x1 + x2 <= theta
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeaConfig {
    pub schedule: DriftSchedule<f64>,
    /// Probability of flipping each label.
    pub noise: f64,
}

impl SeaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.noise) {
            return Err(Error::config(format!(
                "sea noise must be in [0, 0.5], got {}",
                self.noise
            )));
        }
        if self
            .schedule
            .concepts()
            .iter()
            .any(|t| !(0.0..=20.0).contains(t))
        {
            return Err(Error::config("sea thresholds must lie in [0, 20]"));
        }
        Ok(())
    }
}

pub struct SeaGenerator {
    config: SeaConfig,
    rng: StreamRng,
    t: u64,
}

impl SeaGenerator {
    pub fn new(config: SeaConfig, seed: RunSeed) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rng: generator_rng(seed),
            t: 0,
        })
    }
}

impl StreamGenerator for SeaGenerator {
    fn dim(&self) -> usize {
        3
    }

    fn next_instance(&mut self) -> Instance {
        let t = self.t;
        self.t += 1;
        let theta = self.config.schedule.concept_at(t, &mut self.rng);
        let x: Vec<f64> = (0..3).map(|_| 10.0 * self.rng.gen::<f64>()).collect();
        let mut label = sea_label(x[0], x[1], theta);
        if self.config.noise > 0.0 && self.rng.gen::<f64>() < self.config.noise {
            label = !label;
        }
        Instance::new(t, x, label)
    }
}
