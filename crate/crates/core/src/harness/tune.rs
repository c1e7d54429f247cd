//! Random hyperparameter search.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamRange {
    Float {
        low: f64,
        high: f64,
    },
    /// Uniform in log space.
    LogFloat {
        low: f64,
        high: f64,
    },
    /// Inclusive integer range.
    Int {
        low: i64,
        high: i64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub range: ParamRange,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, range: ParamRange) -> Self {
        Self {
            name: name.into(),
            range,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.range {
            ParamRange::Float { low, high } => low.is_finite() && high.is_finite() && low <= high,
            ParamRange::LogFloat { low, high } => low > 0.0 && high.is_finite() && low <= high,
            ParamRange::Int { low, high } => low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "invalid range for parameter `{}`",
                self.name
            )))
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self.range {
            ParamRange::Float { low, high } => {
                if low == high {
                    low
                } else {
                    rng.gen_range(low..high)
                }
            }
            ParamRange::LogFloat { low, high } => {
                if low == high {
                    low
                } else {
                    rng.gen_range(low.ln()..high.ln()).exp()
                }
            }
            ParamRange::Int { low, high } => rng.gen_range(low..=high) as f64,
        }
    }
}

pub type SearchSpace = Vec<ParamSpec>;

/// One drawn configuration, keyed by parameter name.
pub type ParamSet = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub params: ParamSet,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: ParamSet,
    pub best_score: Option<f64>,
    pub trials: Vec<Trial>,
}

pub fn sample_config(space: &[ParamSpec], rng: &mut impl Rng) -> ParamSet {
    space
        .iter()
        .map(|p| (p.name.clone(), p.draw(rng)))
        .collect()
}

/// Draws `n_trials` configurations and returns the highest-scoring one;
/// ties go to the earliest trial and undefined scores rank last.
pub fn tune_random_search<F>(
    space: &[ParamSpec],
    n_trials: usize,
    rng: &mut impl Rng,
    mut objective: F,
) -> Result<TuneResult>
where
    F: FnMut(&ParamSet) -> Result<Option<f64>>,
{
    if space.is_empty() {
        return Err(Error::config("empty search space"));
    }
    if n_trials == 0 {
        return Err(Error::config("tuning needs at least one trial"));
    }
    for p in space {
        p.validate()?;
    }
    let mut trials = Vec::with_capacity(n_trials);
    let mut best: Option<usize> = None;
    for t in 0..n_trials {
        let params = sample_config(space, rng);
        let score = objective(&params)?;
        let better = match (
            best.and_then(|b| trials.get(b)).map(|b: &Trial| b.score),
            score,
        ) {
            (None, _) => true,
            (Some(None), Some(_)) => true,
            (Some(Some(b)), Some(s)) => s > b,
            _ => false,
        };
        trials.push(Trial { params, score });
        if better {
            best = Some(t);
        }
    }
    let b = &trials[best.expect("at least one trial")];
    Ok(TuneResult {
        best: b.params.clone(),
        best_score: b.score,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{RunSeed, Substream};

    fn space() -> SearchSpace {
        vec![
            ParamSpec::new(
                "lr",
                ParamRange::LogFloat {
                    low: 1e-3,
                    high: 1.0,
                },
            ),
            ParamSpec::new("depth", ParamRange::Int { low: 1, high: 6 }),
        ]
    }

    fn objective(p: &ParamSet) -> Result<Option<f64>> {
        Ok(Some(
            -(p["lr"].ln() - 0.1f64.ln()).powi(2) - p["depth"] * 0.01,
        ))
    }

    #[test]
    fn single_trial_returns_its_config() {
        let mut rng = RunSeed::new(1).substream(Substream::Tuner);
        let r = tune_random_search(&space(), 1, &mut rng, objective).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(r.best, r.trials[0].params);
    }

    #[test]
    fn more_trials_never_worse() {
        let run = |n| {
            let mut rng = RunSeed::new(4).substream(Substream::Tuner);
            tune_random_search(&space(), n, &mut rng, objective).unwrap()
        };
        let one = run(1);
        let thirty = run(30);
        assert!(thirty.best_score.unwrap() >= one.best_score.unwrap());
        assert_eq!(thirty.trials[0], one.trials[0]);
        assert_eq!(run(30), thirty);
    }

    #[test]
    fn ties_go_to_earliest_and_ranges_hold() {
        let mut rng = RunSeed::new(2).substream(Substream::Tuner);
        let r = tune_random_search(&space(), 20, &mut rng, |_| Ok(Some(1.0))).unwrap();
        assert_eq!(r.best, r.trials[0].params);
        for t in &r.trials {
            assert!((1e-3..=1.0).contains(&t.params["lr"]));
            let d = t.params["depth"];
            assert!(d.fract() == 0.0 && (1.0..=6.0).contains(&d));
        }
    }

    #[test]
    fn empty_space_is_an_error() {
        let mut rng = RunSeed::new(2).substream(Substream::Tuner);
        assert!(tune_random_search(&[], 5, &mut rng, |_| Ok(Some(0.0))).is_err());
    }
}
