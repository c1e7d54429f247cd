//! Online logistic regression on running-standardised features.

use super::OnlineLearner;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub l2: f64,
    /// Multiplier on the loss gradient of positive instances.
    pub cost_positive: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            l2: 0.0,
            cost_positive: 1.0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("sgd learning_rate must be > 0"));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::config("sgd l2 must be >= 0"));
        }
        if !(self.cost_positive > 0.0 && self.cost_positive.is_finite()) {
            return Err(Error::config("sgd cost_positive must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct RunningScale {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningScale {
    fn update(&mut self, x: &[f64], w: f64) {
        self.n += w;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += w * d / self.n;
            *s += w * d * (v - *m);
        }
    }

    fn standardise(&self, j: usize, v: f64) -> f64 {
        if self.n < 2.0 {
            return v - self.mean[j];
        }
        let sd = (self.m2[j] / (self.n - 1.0)).sqrt();
        if sd > 1e-12 {
            (v - self.mean[j]) / sd
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticSgd {
    config: SgdConfig,
    weights: Vec<f64>,
    bias: f64,
    scale: Option<RunningScale>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(j) => Err(Error::invalid(format!("feature {j} is not finite"))),
        None => Ok(()),
    }
}

impl LogisticSgd {
    pub fn new(config: SgdConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            weights: Vec::new(),
            bias: 0.0,
            scale: None,
        })
    }

    pub fn config(&self) -> &SgdConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match &self.scale {
            Some(s) if s.mean.len() != x.len() => Err(Error::Dimension {
                expected: s.mean.len(),
                got: x.len(),
            }),
            _ => Ok(()),
        }
    }

    fn margin(&self, scale: &RunningScale, x: &[f64]) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .zip(x)
                .enumerate()
                .map(|(j, (w, &v))| w * scale.standardise(j, v))
                .sum::<f64>()
    }
}

impl OnlineLearner for LogisticSgd {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_finite(x)?;
        self.check_dim(x)?;
        Ok(match &self.scale {
            None => 0.5,
            Some(s) => sigmoid(self.margin(s, x)),
        })
    }

    fn learn_weighted(&mut self, x: &[f64], y: bool, weight: u32) -> Result<()> {
        check_finite(x)?;
        self.check_dim(x)?;
        if weight == 0 {
            return Ok(());
        }
        let mut scale = self.scale.take().unwrap_or_else(|| {
            self.weights = vec![0.0; x.len()];
            RunningScale {
                n: 0.0,
                mean: vec![0.0; x.len()],
                m2: vec![0.0; x.len()],
            }
        });
        scale.update(x, weight as f64);
        let z: Vec<f64> = (0..x.len()).map(|j| scale.standardise(j, x[j])).collect();
        let eta = self.config.learning_rate;
        for _ in 0..weight {
            let p = sigmoid(self.margin(&scale, x));
            let mut g = p - y as u8 as f64;
            if y {
                g *= self.config.cost_positive;
            }
            for (w, zj) in self.weights.iter_mut().zip(&z) {
                *w -= eta * (g * zj + self.config.l2 * *w);
            }
            self.bias -= eta * g;
        }
        self.scale = Some(scale);
        Ok(())
    }
}
