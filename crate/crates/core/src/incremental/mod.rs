//! Instance-incremental learners and drift detection.

mod adwin;
mod ensemble;
mod hoeffding;
mod imbalance;
mod leaf_stats;
mod sgd;

pub use adwin::{hoeffding_bound, Adwin};
pub use ensemble::{
    AdaptiveRandomForest, ArfConfig, BaseSpec, LevBagConfig, LeveragingBagging, MAX_MEMBERS,
};
pub use hoeffding::{
    AdaptiveConfig, FeatureSubset, HoeffdingTree, HoeffdingTreeConfig, LeafPrediction, TreeCounters,
};
pub use imbalance::Undersample;
pub use leaf_stats::{Bin, ClassHistogram, Cut, GaussianEstimator};
pub use sgd::{LogisticSgd, SgdConfig};

use crate::error::Result;

/// A binary classifier updated one labeled instance at a time.
pub trait OnlineLearner: Send {
    /// Probability of class 1.
    fn predict_proba(&self, x: &[f64]) -> Result<f64>;

    /// Trains on `(x, y)` as if it were seen `weight` times.
    fn learn_weighted(&mut self, x: &[f64], y: bool, weight: u32) -> Result<()>;

    fn learn_one(&mut self, x: &[f64], y: bool) -> Result<()> {
        self.learn_weighted(x, y, 1)
    }
}

impl<L: OnlineLearner + ?Sized> OnlineLearner for Box<L> {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        (**self).predict_proba(x)
    }

    fn learn_weighted(&mut self, x: &[f64], y: bool, weight: u32) -> Result<()> {
        (**self).learn_weighted(x, y, weight)
    }
}
