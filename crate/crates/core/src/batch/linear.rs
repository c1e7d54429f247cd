//! Batch logistic regression that can be fine-tuned chunk by chunk.

use super::{check_dim, sigmoid, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    /// Initial step size η₀.
    pub eta0: f64,
    /// Step decay γ in η_t = η₀ / (1 + γ t).
    pub decay: f64,
    /// Passes over the data for a fit from scratch.
    pub epochs: usize,
    /// Passes over each new chunk when fine-tuning.
    pub passes: usize,
    pub l2: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            eta0: 0.05,
            decay: 0.05,
            epochs: 5,
            passes: 1,
            l2: 1e-4,
        }
    }
}

impl LinearParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::config("linear eta0 must be > 0"));
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::config("linear decay must be > 0"));
        }
        if self.epochs == 0 || self.passes == 0 {
            return Err(Error::config("linear epochs and passes must be >= 1"));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::config("linear l2 must be >= 0"));
        }
        Ok(())
    }

    /// Step size of fine-tuning update `t` (0-based).
    pub fn step_size(&self, t: u64) -> f64 {
        self.eta0 / (1.0 + self.decay * t as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    params: LinearParams,
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
    updates: u64,
}

impl LinearModel {
    /// Fits from scratch; the feature scaling is frozen from `train`.
    pub fn fit(train: &Dataset, params: LinearParams) -> Result<Self> {
        params.validate()?;
        if train.is_empty() {
            return Err(Error::invalid(
                "cannot fit a linear model on an empty batch",
            ));
        }
        let p = train.dim();
        let n = train.len() as f64;
        let mut mean = vec![0.0; p];
        for row in &train.x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; p];
        for row in &train.x {
            for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        let mut model = Self {
            params,
            mean,
            scale,
            weights: vec![0.0; p],
            bias: 0.0,
            updates: 0,
        };
        for _ in 0..params.epochs {
            model.pass(train, params.eta0);
        }
        Ok(model)
    }

    fn pass(&mut self, data: &Dataset, eta: f64) {
        let mut z = vec![0.0; self.weights.len()];
        for (row, &y) in data.x.iter().zip(&data.y) {
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = (row[j] - self.mean[j]) / self.scale[j];
            }
            let margin = self.bias + self.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>();
            let g = sigmoid(margin) - y as u8 as f64;
            for (w, zj) in self.weights.iter_mut().zip(&z) {
                *w -= eta * (g * zj + self.params.l2 * *w);
            }
            self.bias -= eta * g;
        }
    }

    /// One fine-tuning update on a new batch at the decayed step size.
    pub fn fine_tune(&mut self, data: &Dataset) -> Result<()> {
        if !data.is_empty() {
            check_dim(self.weights.len(), &data.x[0])?;
        }
        let eta = self.params.step_size(self.updates);
        for _ in 0..self.params.passes {
            self.pass(data, eta);
        }
        self.updates += 1;
        Ok(())
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x)?;
        let margin = self.bias
            + self
                .weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * (x[j] - self.mean[j]) / self.scale[j])
                .sum::<f64>();
        Ok(sigmoid(margin))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::auc_roc;
    use crate::stream::{RunSeed, Substream};
    use rand::Rng;

    fn data(seed: u64, n: usize, flip: bool) -> Dataset {
        let mut rng = RunSeed::new(seed).substream(Substream::Learner);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen()])
            .collect();
        let y = x.iter().map(|r| (r[0] > 0.0) != flip).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn fits_separable_batch() {
        let d = data(1, 1000, false);
        let m = LinearModel::fit(&d, LinearParams::default()).unwrap();
        let scores: Vec<f64> = d.x.iter().map(|r| m.predict_proba(r).unwrap()).collect();
        assert!(auc_roc(&scores, &d.y).unwrap() > 0.99);
    }

    #[test]
    fn step_sizes_strictly_decrease() {
        let p = LinearParams::default();
        assert_eq!(p.step_size(0), p.eta0);
        for t in 0..100 {
            assert!(p.step_size(t + 1) < p.step_size(t));
        }
    }

    #[test]
    fn fine_tuning_moves_towards_new_concept() {
        let mut m = LinearModel::fit(&data(2, 1000, false), LinearParams::default()).unwrap();
        let w0 = m.weights()[0];
        for k in 0..20 {
            m.fine_tune(&data(10 + k, 500, true)).unwrap();
        }
        assert_eq!(m.updates(), 20);
        assert!(w0 > 0.0 && m.weights()[0] < w0);
    }
}
