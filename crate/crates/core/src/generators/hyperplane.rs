//! Rotating hyperplane with incremental drift.
//!
//! Features are uniform on [0, 1]. Class 1 iff `sum w_j x_j > sum w_j / 2`;
//! ties on the boundary go to class 0. After each instance every drifting
//! weight moves by `magnitude` in its current direction, and the direction
//! flips with probability `reversal_prob`.

use rand::Rng;

use super::{generator_rng, StreamGenerator};
use crate::error::{Error, Result};
use crate::stream::{Instance, RunSeed, StreamRng};

pub fn hyperplane_label(weights: &[f64], x: &[f64]) -> bool {
    let score: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum();
    let threshold = 0.5 * weights.iter().sum::<f64>();
    score > threshold
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneConfig {
    pub dim: usize,
    /// Number of leading weights that drift.
    pub drift_features: usize,
    pub magnitude: f64,
    pub reversal_prob: f64,
    pub noise: f64,
}

impl Default for HyperplaneConfig {
    fn default() -> Self {
        Self {
            dim: 10,
            drift_features: 2,
            magnitude: 0.001,
            reversal_prob: 0.1,
            noise: 0.05,
        }
    }
}

impl HyperplaneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("hyperplane dim must be > 0"));
        }
        if self.drift_features > self.dim {
            return Err(Error::config("hyperplane drift_features exceeds dim"));
        }
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(Error::config("hyperplane magnitude must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.reversal_prob) || !(0.0..=0.5).contains(&self.noise) {
            return Err(Error::config("hyperplane probabilities out of range"));
        }
        Ok(())
    }
}

pub struct HyperplaneGenerator {
    config: HyperplaneConfig,
    weights: Vec<f64>,
    directions: Vec<f64>,
    rng: StreamRng,
    t: u64,
}

impl HyperplaneGenerator {
    pub fn new(config: HyperplaneConfig, seed: RunSeed) -> Result<Self> {
        config.validate()?;
        let mut rng = generator_rng(seed);
        let weights = (0..config.dim).map(|_| rng.gen::<f64>()).collect();
        let directions = vec![1.0; config.dim];
        Ok(Self {
            config,
            weights,
            directions,
            rng,
            t: 0,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl StreamGenerator for HyperplaneGenerator {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn next_instance(&mut self) -> Instance {
        let t = self.t;
        self.t += 1;
        let x: Vec<f64> = (0..self.config.dim)
            .map(|_| self.rng.gen::<f64>())
            .collect();
        let mut label = hyperplane_label(&self.weights, &x);
        if self.config.noise > 0.0 && self.rng.gen::<f64>() < self.config.noise {
            label = !label;
        }
        for j in 0..self.config.drift_features {
            self.weights[j] += self.directions[j] * self.config.magnitude;
            if self.rng.gen::<f64>() < self.config.reversal_prob {
                self.directions[j] = -self.directions[j];
            }
        }
        Instance::new(t, x, label)
    }
}
