//! Online bagging ensembles: Leveraging Bagging and Adaptive Random Forest.
//!
//! Both predict with the unweighted mean of member probabilities.

use rand::{RngCore, SeedableRng};

use super::adwin::Adwin;
use super::hoeffding::{FeatureSubset, HoeffdingTree, HoeffdingTreeConfig};
use super::sgd::{LogisticSgd, SgdConfig};
use super::OnlineLearner;
use crate::delay::poisson;
use crate::error::{Error, Result};
use crate::stream::StreamRng;

pub const MAX_MEMBERS: usize = 100;

/// Recipe for an ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseSpec {
    Tree(HoeffdingTreeConfig),
    Linear(SgdConfig),
}

impl BaseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BaseSpec::Tree(c) => c.validate(),
            BaseSpec::Linear(c) => c.validate(),
        }
    }

    pub fn build(&self, seed: u64) -> Result<Box<dyn OnlineLearner>> {
        Ok(match self {
            BaseSpec::Tree(c) => Box::new(HoeffdingTree::new(c.clone(), seed)?),
            BaseSpec::Linear(c) => Box::new(LogisticSgd::new(*c)?),
        })
    }
}

fn check_members(n: usize) -> Result<()> {
    if n == 0 || n > MAX_MEMBERS {
        return Err(Error::config(format!(
            "ensemble size must be in 1..={MAX_MEMBERS}, got {n}"
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::config(format!(
            "ensemble lambda must be > 0, got {lambda}"
        )));
    }
    Ok(())
}

fn wrong(p: f64, y: bool) -> f64 {
    ((p >= 0.5) != y) as u8 as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevBagConfig {
    pub members: usize,
    pub lambda: f64,
    /// ADWIN confidence for the member error monitors; `None` disables
    /// resets.
    pub delta: Option<f64>,
    /// Replaces the Poisson draw with a constant instance weight.
    pub fixed_weight: Option<u32>,
    pub base: BaseSpec,
}

impl Default for LevBagConfig {
    fn default() -> Self {
        Self {
            members: 10,
            lambda: 6.0,
            delta: Some(0.002),
            fixed_weight: None,
            base: BaseSpec::Tree(HoeffdingTreeConfig::default()),
        }
    }
}

struct LevBagMember {
    learner: Box<dyn OnlineLearner>,
    errors: Option<Adwin>,
}

pub struct LeveragingBagging {
    config: LevBagConfig,
    members: Vec<LevBagMember>,
    rng: StreamRng,
    resets: u64,
}

impl LeveragingBagging {
    pub fn new(config: LevBagConfig, seed: u64) -> Result<Self> {
        check_members(config.members)?;
        check_lambda(config.lambda)?;
        config.base.validate()?;
        let mut rng = StreamRng::seed_from_u64(seed);
        let members = (0..config.members)
            .map(|_| Self::member(&config, &mut rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            members,
            rng,
            resets: 0,
        })
    }

    fn member(config: &LevBagConfig, rng: &mut StreamRng) -> Result<LevBagMember> {
        Ok(LevBagMember {
            learner: config.base.build(rng.next_u64())?,
            errors: config.delta.map(Adwin::new).transpose()?,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members replaced after a detected error increase.
    pub fn resets(&self) -> u64 {
        self.resets
    }

    pub fn member_probas(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.members
            .iter()
            .map(|m| m.learner.predict_proba(x))
            .collect()
    }
}

impl OnlineLearner for LeveragingBagging {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if self.members.is_empty() {
            return Err(Error::invalid("empty ensemble"));
        }
        let p = self.member_probas(x)?;
        Ok(p.iter().sum::<f64>() / p.len() as f64)
    }

    fn learn_weighted(&mut self, x: &[f64], y: bool, weight: u32) -> Result<()> {
        if weight == 0 {
            return Ok(());
        }
        let mut change = false;
        for m in &mut self.members {
            let err = wrong(m.learner.predict_proba(x)?, y);
            let k = match self.config.fixed_weight {
                Some(k) => k,
                None => poisson(&mut self.rng, self.config.lambda) as u32,
            };
            if k > 0 {
                m.learner.learn_weighted(x, y, k.saturating_mul(weight))?;
            }
            if let Some(adwin) = m.errors.as_mut() {
                let before = adwin.estimation();
                if adwin.update(err)? && adwin.estimation() > before {
                    change = true;
                }
            }
        }
        if change {
            let mut worst = 0;
            let mut worst_err = f64::NEG_INFINITY;
            for (i, m) in self.members.iter().enumerate() {
                let e = m.errors.as_ref().map_or(0.0, Adwin::estimation);
                if e > worst_err {
                    worst = i;
                    worst_err = e;
                }
            }
            self.members[worst] = Self::member(&self.config, &mut self.rng)?;
            self.resets += 1;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArfConfig {
    pub members: usize,
    pub lambda: f64,
    /// Warning and drift ADWIN confidences; `None` disables both.
    pub detectors: Option<(f64, f64)>,
    pub tree: HoeffdingTreeConfig,
}

impl Default for ArfConfig {
    fn default() -> Self {
        Self {
            members: 10,
            lambda: 6.0,
            detectors: Some((0.01, 0.001)),
            tree: HoeffdingTreeConfig {
                grace_period: 50.0,
                split_confidence: 0.01,
                features: FeatureSubset::SqrtPlusOne,
                ..HoeffdingTreeConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
struct ArfMember {
    tree: HoeffdingTree,
    background: Option<HoeffdingTree>,
    warning: Option<Adwin>,
    drift: Option<Adwin>,
}

#[derive(Debug, Clone)]
pub struct AdaptiveRandomForest {
    config: ArfConfig,
    members: Vec<ArfMember>,
    rng: StreamRng,
    replacements: u64,
}

impl AdaptiveRandomForest {
    pub fn new(config: ArfConfig, seed: u64) -> Result<Self> {
        check_members(config.members)?;
        check_lambda(config.lambda)?;
        config.tree.validate()?;
        if let Some((warn, drift)) = config.detectors {
            Adwin::new(warn)?;
            Adwin::new(drift)?;
            if warn <= drift {
                return Err(Error::config(format!(
                    "arf warning delta ({warn}) must exceed drift delta ({drift})"
                )));
            }
        }
        let mut rng = StreamRng::seed_from_u64(seed);
        let members = (0..config.members)
            .map(|_| {
                let tree = HoeffdingTree::new(config.tree.clone(), rng.next_u64())?;
                let mut m = ArfMember {
                    tree,
                    background: None,
                    warning: None,
                    drift: None,
                };
                Self::reset_detectors(&config, &mut m);
                Ok(m)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            members,
            rng,
            replacements: 0,
        })
    }

    fn reset_detectors(config: &ArfConfig, m: &mut ArfMember) {
        if let Some((warn, drift)) = config.detectors {
            m.warning = Some(Adwin::new(warn).expect("validated"));
            m.drift = Some(Adwin::new(drift).expect("validated"));
        }
    }

    fn fresh_tree(&mut self) -> HoeffdingTree {
        HoeffdingTree::new(self.config.tree.clone(), self.rng.next_u64()).expect("validated")
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn replacements(&self) -> u64 {
        self.replacements
    }

    pub fn has_background(&self, i: usize) -> bool {
        self.members[i].background.is_some()
    }

    pub fn member_probas(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.members
            .iter()
            .map(|m| m.tree.predict_proba(x))
            .collect()
    }

    /// Starts a background tree for member `i` as a warning would.
    pub fn force_warning(&mut self, i: usize) {
        if self.members[i].background.is_none() {
            let bg = self.fresh_tree();
            self.members[i].background = Some(bg);
        }
    }

    /// Replaces member `i` as a drift detection would.
    pub fn force_drift(&mut self, i: usize) {
        let replacement = match self.members[i].background.take() {
            Some(bg) => bg,
            None => self.fresh_tree(),
        };
        let m = &mut self.members[i];
        m.tree = replacement;
        Self::reset_detectors(&self.config, m);
        self.replacements += 1;
    }
}

impl OnlineLearner for AdaptiveRandomForest {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if self.members.is_empty() {
            return Err(Error::invalid("empty ensemble"));
        }
        let p = self.member_probas(x)?;
        Ok(p.iter().sum::<f64>() / p.len() as f64)
    }

    fn learn_weighted(&mut self, x: &[f64], y: bool, weight: u32) -> Result<()> {
        if weight == 0 {
            return Ok(());
        }
        for i in 0..self.members.len() {
            let err = wrong(self.members[i].tree.predict_proba(x)?, y);
            let k = poisson(&mut self.rng, self.config.lambda) as u32;
            let m = &mut self.members[i];
            if k > 0 {
                m.tree.learn_weighted(x, y, k.saturating_mul(weight))?;
                if let Some(bg) = m.background.as_mut() {
                    bg.learn_weighted(x, y, k.saturating_mul(weight))?;
                }
            }
            let mut warned = false;
            if let Some(w) = m.warning.as_mut() {
                warned = w.update(err)?;
            }
            let mut drifted = false;
            if let Some(d) = m.drift.as_mut() {
                drifted = d.update(err)?;
            }
            if drifted {
                self.force_drift(i);
            } else if warned {
                if let Some((warn, _)) = self.config.detectors {
                    self.members[i].warning = Some(Adwin::new(warn)?);
                }
                self.force_warning(i);
            }
        }
        Ok(())
    }
}
