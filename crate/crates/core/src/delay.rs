//! Per-instance label delays.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::stream::Instance;

/// Instances per unit of delay factor on the full-size benchmark.
pub const DEFAULT_DELAY_UNIT: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq)]
pub enum DelayModel {
    /// Label available right after the instance.
    Zero,
    /// Poisson delay with mean `alpha * unit` instances.
    PoissonFactor { alpha: f64, unit: f64 },
    /// Constant delay in instances.
    Fixed(u64),
    /// Dispatch on the true class, e.g. fraud reported within days while
    /// genuine cases are confirmed after a fixed horizon.
    ClassConditional {
        positive: Box<DelayModel>,
        negative: Box<DelayModel>,
    },
}

impl DelayModel {
    pub fn poisson(alpha: f64) -> Result<Self> {
        Self::poisson_with_unit(alpha, DEFAULT_DELAY_UNIT)
    }

    pub fn poisson_with_unit(alpha: f64, unit: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::config(format!(
                "delay.alpha must be >= 0, got {alpha}"
            )));
        }
        if !(unit.is_finite() && unit > 0.0) {
            return Err(Error::config(format!("delay.unit must be > 0, got {unit}")));
        }
        Ok(DelayModel::PoissonFactor { alpha, unit })
    }

    pub fn class_conditional(positive: DelayModel, negative: DelayModel) -> Result<Self> {
        for (key, sub) in [("delay.positive", &positive), ("delay.negative", &negative)] {
            if matches!(sub, DelayModel::ClassConditional { .. }) {
                return Err(Error::config(format!(
                    "{key} cannot itself be class-conditional"
                )));
            }
            sub.validate()?;
        }
        Ok(DelayModel::ClassConditional {
            positive: Box::new(positive),
            negative: Box::new(negative),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DelayModel::Zero | DelayModel::Fixed(_) => Ok(()),
            DelayModel::PoissonFactor { alpha, unit } => {
                Self::poisson_with_unit(*alpha, *unit).map(|_| ())
            }
            DelayModel::ClassConditional { positive, negative } => {
                Self::class_conditional((**positive).clone(), (**negative).clone()).map(|_| ())
            }
        }
    }

    /// Delay factor reported in summaries (0 for non-Poisson modes).
    pub fn factor(&self) -> f64 {
        match self {
            DelayModel::PoissonFactor { alpha, .. } => *alpha,
            _ => 0.0,
        }
    }

    pub fn sample(&self, label: bool, rng: &mut impl Rng) -> u64 {
        match self {
            DelayModel::Zero => 0,
            DelayModel::Fixed(d) => *d,
            DelayModel::PoissonFactor { alpha, unit } => poisson(rng, alpha * unit),
            DelayModel::ClassConditional { positive, negative } => {
                if label {
                    positive.sample(label, rng)
                } else {
                    negative.sample(label, rng)
                }
            }
        }
    }
}

/// Δt for one instance, drawn from the `delay` sub-stream.
pub fn sample_delay(model: &DelayModel, instance: &Instance, rng: &mut impl Rng) -> u64 {
    model.sample(instance.label, rng)
}

/// Poisson draw; mean 0 is the point mass at 0.
pub fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{RunSeed, Substream};

    fn moments(model: &DelayModel, n: usize) -> (f64, f64) {
        let mut rng = RunSeed::new(11).substream(Substream::Delay);
        let xs: Vec<f64> = (0..n)
            .map(|_| model.sample(false, &mut rng) as f64)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn zero_factor_is_always_zero() {
        let m = DelayModel::poisson(0.0).unwrap();
        let mut rng = RunSeed::new(1).substream(Substream::Delay);
        assert!((0..1000).all(|_| m.sample(true, &mut rng) == 0));
        assert_eq!(DelayModel::Zero.sample(false, &mut rng), 0);
    }

    #[test]
    fn poisson_factor_mean_and_variance() {
        let (mean, var) = moments(&DelayModel::poisson(1.0).unwrap(), 1_000_000);
        assert!((mean - 10_000.0).abs() <= 100.0, "mean {mean}");
        assert!((var - 10_000.0).abs() <= 500.0, "var {var}");
    }

    #[test]
    fn large_mean_poisson_is_fast_and_centered() {
        let (mean, _) = moments(&DelayModel::poisson(7.0).unwrap(), 200_000);
        assert!((mean - 70_000.0).abs() < 100.0, "mean {mean}");
    }

    #[test]
    fn class_conditional_fixed_horizon_for_negatives() {
        let day = 100;
        let m = DelayModel::class_conditional(
            DelayModel::poisson_with_unit(0.1, 10.0 * day as f64).unwrap(),
            DelayModel::Fixed(30 * day),
        )
        .unwrap();
        let mut rng = RunSeed::new(3).substream(Substream::Delay);
        let neg = Instance::new(0, vec![], false);
        let pos = Instance::new(1, vec![], true);
        for _ in 0..1000 {
            assert_eq!(sample_delay(&m, &neg, &mut rng), 30 * day);
        }
        let pos_mean: f64 = (0..10_000)
            .map(|_| sample_delay(&m, &pos, &mut rng) as f64)
            .sum::<f64>()
            / 10_000.0;
        assert!((pos_mean - 100.0).abs() < 2.0);
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(DelayModel::poisson(-0.5).is_err());
        assert!(DelayModel::poisson(f64::NAN).is_err());
        let nested = DelayModel::class_conditional(DelayModel::Zero, DelayModel::Zero).unwrap();
        assert!(DelayModel::class_conditional(nested, DelayModel::Zero).is_err());
    }
}
