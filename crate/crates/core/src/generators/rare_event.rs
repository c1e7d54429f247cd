//! Imbalanced rare-event stream.
//!
//! Each class draws from its own Gaussian mixture: a few broad negative
//! components and several tighter positive components that overlap the
//! negatives. Concept `c` applies a fixed feature permutation (identity for
//! concept 0), so a drift moves the positive regions while the marginal
//! feature distributions stay similar.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{generator_rng, DriftSchedule, StreamGenerator};
use crate::error::{Error, Result};
use crate::stream::{Instance, RunSeed, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct RareEventConfig {
    pub dim: usize,
    pub positive_rate: f64,
    pub schedule: DriftSchedule<usize>,
    pub positive_components: usize,
    pub negative_components: usize,
    /// Spread of positive component centres relative to unit noise.
    pub separation: f64,
    /// Standard deviation of positive components.
    pub positive_spread: f64,
}

impl RareEventConfig {
    pub fn new(positive_rate: f64, schedule: DriftSchedule<usize>) -> Self {
        Self {
            dim: 10,
            positive_rate,
            schedule,
            positive_components: 6,
            negative_components: 3,
            separation: 1.6,
            positive_spread: 0.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.positive_rate > 0.0 && self.positive_rate <= 0.5) {
            return Err(Error::config(format!(
                "rare-event positive rate must be in (0, 0.5], got {}",
                self.positive_rate
            )));
        }
        if self.dim < 2 || self.positive_components == 0 || self.negative_components == 0 {
            return Err(Error::config(
                "rare-event needs dim >= 2 and non-empty mixtures",
            ));
        }
        if !(self.separation > 0.0 && self.positive_spread > 0.0) {
            return Err(Error::config(
                "rare-event separation and spread must be > 0",
            ));
        }
        Ok(())
    }
}

pub struct RareEventGenerator {
    config: RareEventConfig,
    positive_centres: Vec<Vec<f64>>,
    negative_centres: Vec<Vec<f64>>,
    permutations: Vec<Vec<usize>>,
    rng: StreamRng,
    t: u64,
}

impl RareEventGenerator {
    pub fn new(config: RareEventConfig, seed: RunSeed) -> Result<Self> {
        config.validate()?;
        let mut rng = generator_rng(seed);
        let dim = config.dim;
        let gauss = |rng: &mut StreamRng, scale: f64| -> Vec<f64> {
            (0..dim)
                .map(|_| {
                    scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
                })
                .collect::<Vec<f64>>()
        };
        let negative_centres = (0..config.negative_components)
            .map(|_| gauss(&mut rng, 0.3))
            .collect();
        let positive_centres = (0..config.positive_components)
            .map(|_| gauss(&mut rng, config.separation))
            .collect();
        let n_concepts = config
            .schedule
            .concepts()
            .iter()
            .max()
            .copied()
            .unwrap_or(0)
            + 1;
        let mut permutations = vec![(0..dim).collect::<Vec<_>>()];
        for _ in 1..n_concepts {
            let mut p: Vec<usize> = (0..dim).collect();
            p.shuffle(&mut rng);
            permutations.push(p);
        }
        Ok(Self {
            config,
            positive_centres,
            negative_centres,
            permutations,
            rng,
            t: 0,
        })
    }
}

impl StreamGenerator for RareEventGenerator {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn next_instance(&mut self) -> Instance {
        let t = self.t;
        self.t += 1;
        let concept = self.config.schedule.concept_at(t, &mut self.rng);
        let label = self.rng.gen::<f64>() < self.config.positive_rate;
        let (centres, spread) = if label {
            (&self.positive_centres, self.config.positive_spread)
        } else {
            (&self.negative_centres, 1.0)
        };
        let centre = &centres[self.rng.gen_range(0..centres.len())];
        let base: Vec<f64> = centre
            .iter()
            .map(|c| {
                c + spread
                    * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut self.rng)
            })
            .collect();
        let perm = &self.permutations[concept];
        let features = perm.iter().map(|&j| base[j]).collect();
        Instance::new(t, features, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generator(rate: f64, seed: u64) -> RareEventGenerator {
        let cfg = RareEventConfig::new(rate, DriftSchedule::stationary(0));
        RareEventGenerator::new(cfg, RunSeed::new(seed)).unwrap()
    }

    #[test]
    fn positive_rate_matches() {
        let n = 1_000_000;
        let mut g = generator(0.001, 5);
        let pos = (0..n).filter(|_| g.next_instance().label).count();
        let rate = pos as f64 / n as f64;
        assert!((rate - 0.001).abs() <= 0.0002, "rate {rate}");
    }

    #[test]
    fn balanced_at_half() {
        let cfg = RareEventConfig::new(0.5, DriftSchedule::stationary(0));
        let mut g = RareEventGenerator::new(cfg, RunSeed::new(1)).unwrap();
        let pos = (0..100_000).filter(|_| g.next_instance().label).count() as f64 / 1e5;
        assert!((0.49..=0.51).contains(&pos));
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            generator(0.01, 3).take_instances(200),
            generator(0.01, 3).take_instances(200)
        );
    }

    #[test]
    fn drift_permutes_features() {
        let schedule =
            DriftSchedule::new(vec![10], vec![0, 1], crate::generators::DriftKind::Abrupt).unwrap();
        let g =
            RareEventGenerator::new(RareEventConfig::new(0.01, schedule), RunSeed::new(2)).unwrap();
        assert_eq!(g.permutations.len(), 2);
        assert_ne!(g.permutations[0], g.permutations[1]);
    }

    #[test]
    fn rate_bounds() {
        for rate in [0.0, 0.51, 0.9] {
            let cfg = RareEventConfig::new(rate, DriftSchedule::stationary(0));
            assert!(RareEventGenerator::new(cfg, RunSeed::new(1)).is_err());
        }
    }
}
