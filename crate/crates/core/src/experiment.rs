//! Benchmark presets and end-to-end runs: generate, hold out the offline
//! reserve, pretrain, then evaluate under label delay.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use rand::RngCore;

use crate::batch::{
    CartParams, Dataset, GbdtParams, LinearParams, ModelSpec, Strategy, StrategyKind,
};
use crate::delay::DelayModel;
use crate::error::{Error, Result};
use crate::generators::{
    csv_replay, AgrawalConfig, AgrawalGenerator, CsvSchema, DriftKind, DriftSchedule,
    HyperplaneConfig, HyperplaneGenerator, RareEventConfig, RareEventGenerator, SeaConfig,
    SeaGenerator, StreamGenerator, SEA_THRESHOLDS,
};
use crate::harness::{
    auc_roc, mean_std, run_stream, tune_random_search, ChunkPlan, LearnerRef, Metric, ParamRange,
    ParamSet, ParamSpec, RunOptions, RunOutput, SearchSpace, TuneResult,
};
use crate::incremental::{
    AdaptiveRandomForest, ArfConfig, BaseSpec, HoeffdingTree, HoeffdingTreeConfig, LevBagConfig,
    LeveragingBagging, LogisticSgd, OnlineLearner, SgdConfig, Undersample,
};
use crate::stream::{schedule_events, Instance, RunSeed, Substream};

/// Where instances come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Agrawal(AgrawalConfig),
    Sea(SeaConfig),
    Hyperplane(HyperplaneConfig),
    RareEvent(RareEventConfig),
    Csv(PathBuf),
}

impl DatasetSpec {
    /// Generator-time change points.
    pub fn change_points(&self) -> Vec<u64> {
        match self {
            DatasetSpec::Agrawal(c) => c.schedule.change_points().to_vec(),
            DatasetSpec::Sea(c) => c.schedule.change_points().to_vec(),
            DatasetSpec::RareEvent(c) => c.schedule.change_points().to_vec(),
            DatasetSpec::Hyperplane(_) | DatasetSpec::Csv(_) => Vec::new(),
        }
    }
}

/// A dataset together with the stream layout used to evaluate on it.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub name: String,
    pub dataset: DatasetSpec,
    /// Generated instances, offline reserve included. Ignored for CSV.
    pub n_instances: usize,
    pub offline_fraction: f64,
    pub chunk_mean: f64,
    /// Instances per unit of delay factor.
    pub delay_unit: f64,
    pub metric: Metric,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.offline_fraction > 0.0 && self.offline_fraction < 1.0) {
            return Err(Error::config(format!(
                "stream.offline_fraction must be in (0, 1), got {}",
                self.offline_fraction
            )));
        }
        if !(self.chunk_mean >= 1.0 && self.chunk_mean.is_finite()) {
            return Err(Error::config(format!(
                "stream.chunk_mean must be >= 1, got {}",
                self.chunk_mean
            )));
        }
        if !(self.delay_unit > 0.0 && self.delay_unit.is_finite()) {
            return Err(Error::config(format!(
                "delay.unit must be > 0, got {}",
                self.delay_unit
            )));
        }
        if self.n_instances < 2 && !matches!(self.dataset, DatasetSpec::Csv(_)) {
            return Err(Error::config("stream.instances must be >= 2"));
        }
        Ok(())
    }
}

pub const PRESETS: &[&str] = &[
    "agr_a",
    "agr_g",
    "hyper_f",
    "sea_a",
    "sea_g",
    "agr_a_desk",
    "agr_g_desk",
    "hyper_f_desk",
    "sea_a_desk",
    "sea_g_desk",
    "rare_event",
];

struct Scale {
    n: usize,
    drift_every: u64,
    width: f64,
    chunk_mean: f64,
    unit: f64,
}

const FULL: Scale = Scale {
    n: 1_000_000,
    drift_every: 250_000,
    width: 50_000.0,
    chunk_mean: 10_000.0,
    unit: 10_000.0,
};

const DESK: Scale = Scale {
    n: 100_000,
    drift_every: 25_000,
    width: 5_000.0,
    chunk_mean: 1_000.0,
    unit: 1_000.0,
};

/// AGRAWAL concept sequence: function 5, then 1, recurring.
pub const AGRAWAL_FUNCTIONS: [u8; 4] = [5, 1, 5, 1];

pub fn preset(name: &str) -> Result<StreamSpec> {
    let (base, scale) = match name.strip_suffix("_desk") {
        Some(b) if b != "rare_event" => (b, DESK),
        _ => (name, FULL),
    };
    let kind = |gradual: bool| {
        if gradual {
            DriftKind::Gradual { width: scale.width }
        } else {
            DriftKind::Abrupt
        }
    };
    let dataset = match base {
        "agr_a" | "agr_g" => DatasetSpec::Agrawal(AgrawalConfig {
            schedule: DriftSchedule::every(
                scale.drift_every,
                AGRAWAL_FUNCTIONS.to_vec(),
                kind(base == "agr_g"),
            )?,
            perturbation: 0.05,
        }),
        "sea_a" | "sea_g" => DatasetSpec::Sea(SeaConfig {
            schedule: DriftSchedule::every(
                scale.drift_every,
                SEA_THRESHOLDS.to_vec(),
                kind(base == "sea_g"),
            )?,
            noise: 0.1,
        }),
        "hyper_f" => DatasetSpec::Hyperplane(HyperplaneConfig::default()),
        "rare_event" if name == "rare_event" => {
            return Ok(StreamSpec {
                name: name.to_string(),
                dataset: DatasetSpec::RareEvent(RareEventConfig::new(
                    0.005,
                    DriftSchedule::new(vec![100_000], vec![0, 1], DriftKind::Abrupt)?,
                )),
                n_instances: 200_000,
                offline_fraction: 0.1,
                chunk_mean: 9_000.0,
                delay_unit: 9_000.0,
                metric: Metric::AucPr,
            })
        }
        _ => {
            return Err(Error::config(format!(
                "unknown preset `{name}` (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(StreamSpec {
        name: name.to_string(),
        dataset,
        n_instances: scale.n,
        offline_fraction: 0.1,
        chunk_mean: scale.chunk_mean,
        delay_unit: scale.unit,
        metric: Metric::AucRoc,
    })
}

/// Instance-incremental learner recipe.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementalSpec {
    Tree(HoeffdingTreeConfig),
    Sgd(SgdConfig),
    LevBag(LevBagConfig),
    Arf(ArfConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LearnerSpec {
    Incremental {
        spec: IncrementalSpec,
        /// Keep probability for negatives when undersampling.
        undersample: Option<f64>,
    },
    Batch {
        model: ModelSpec,
        strategy: StrategyKind,
        /// Completed chunks per training step.
        train_every: usize,
    },
}

pub const MODEL_NAMES: &[&str] = &[
    "ht",
    "hat",
    "lr",
    "lb_ht",
    "lb_lr",
    "arf",
    "r_gbdt",
    "b_gbdt",
    "static_gbdt",
    "propagate_gbdt",
    "r_cart",
    "b_cart",
    "static_cart",
    "propagate_cart",
    "r_linear",
    "static_linear",
    "u_linear",
];

impl LearnerSpec {
    /// Default configuration for a model name such as `ht`, `lb_ht`,
    /// `r_gbdt` or `u_linear`; `us_` in front enables undersampling.
    pub fn from_name(name: &str) -> Result<Self> {
        let (undersample, base) = match name.strip_prefix("us_") {
            Some(b) => (Some(0.1), b),
            None => (None, name),
        };
        let incremental = |spec| Ok(LearnerSpec::Incremental { spec, undersample });
        match base {
            "ht" => return incremental(IncrementalSpec::Tree(HoeffdingTreeConfig::default())),
            "hat" => return incremental(IncrementalSpec::Tree(HoeffdingTreeConfig::adaptive())),
            "lr" => return incremental(IncrementalSpec::Sgd(SgdConfig::default())),
            "lb_ht" => return incremental(IncrementalSpec::LevBag(LevBagConfig::default())),
            "lb_lr" => {
                return incremental(IncrementalSpec::LevBag(LevBagConfig {
                    base: BaseSpec::Linear(SgdConfig::default()),
                    ..LevBagConfig::default()
                }))
            }
            "arf" => return incremental(IncrementalSpec::Arf(ArfConfig::default())),
            _ => {}
        }
        let unknown = || {
            Error::config(format!(
                "unknown model `{name}` (known: {})",
                MODEL_NAMES.join(", ")
            ))
        };
        if undersample.is_some() {
            return Err(unknown());
        }
        let (prefix, model) = base.split_once('_').ok_or_else(unknown)?;
        let strategy = match prefix {
            "static" => StrategyKind::Static,
            "r" => StrategyKind::Retrain,
            "b" => StrategyKind::Stack { members: 3 },
            "propagate" => StrategyKind::Propagate { chunks: 3 },
            "u" => StrategyKind::FineTune,
            _ => return Err(unknown()),
        };
        let model = match model {
            "gbdt" => ModelSpec::Gbdt(GbdtParams::default()),
            "cart" | "dt" => ModelSpec::Cart(CartParams::default()),
            "linear" => ModelSpec::Linear(LinearParams::default()),
            _ => return Err(unknown()),
        };
        if strategy == StrategyKind::FineTune && !matches!(model, ModelSpec::Linear(_)) {
            return Err(Error::config(format!(
                "model `{name}`: fine-tuning needs the linear model"
            )));
        }
        Ok(LearnerSpec::Batch {
            model,
            strategy,
            train_every: 1,
        })
    }

    pub fn name(&self) -> String {
        match self {
            LearnerSpec::Incremental { spec, undersample } => {
                let base = match spec {
                    IncrementalSpec::Tree(c) if c.adaptive.is_some() => "hat",
                    IncrementalSpec::Tree(_) => "ht",
                    IncrementalSpec::Sgd(_) => "lr",
                    IncrementalSpec::LevBag(c) => match c.base {
                        BaseSpec::Tree(_) => "lb_ht",
                        BaseSpec::Linear(_) => "lb_lr",
                    },
                    IncrementalSpec::Arf(_) => "arf",
                };
                match undersample {
                    Some(_) => format!("us_{base}"),
                    None => base.to_string(),
                }
            }
            LearnerSpec::Batch {
                model, strategy, ..
            } => {
                let prefix = match strategy {
                    StrategyKind::Static => "static".to_string(),
                    StrategyKind::Retrain => "r".to_string(),
                    StrategyKind::Stack { members: 3 } => "b".to_string(),
                    StrategyKind::Stack { members } => format!("b{members}"),
                    StrategyKind::Propagate { chunks: 3 } => "propagate".to_string(),
                    StrategyKind::Propagate { chunks } => format!("propagate{chunks}"),
                    StrategyKind::FineTune => "u".to_string(),
                };
                format!("{prefix}_{}", model.name())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::Incremental { spec, undersample } => {
                if let Some(r) = undersample {
                    if !(*r > 0.0 && *r <= 1.0) {
                        return Err(Error::config(format!(
                            "model.keep_negative must be in (0, 1], got {r}"
                        )));
                    }
                }
                match spec {
                    IncrementalSpec::Tree(c) => c.validate(),
                    IncrementalSpec::Sgd(c) => c.validate(),
                    IncrementalSpec::LevBag(c) => c.base.validate(),
                    IncrementalSpec::Arf(c) => c.tree.validate(),
                }
            }
            LearnerSpec::Batch {
                model,
                strategy,
                train_every,
            } => {
                if *train_every == 0 {
                    return Err(Error::config("model.train_every must be >= 1"));
                }
                Strategy::new(*strategy, *model, RunSeed::new(0)).map(|_| ())
            }
        }
    }

    /// Sets one named hyperparameter.
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<()> {
        let bad = |what: &str| Error::config(format!("model.{key}: {what}, got {value}"));
        let count = |v: f64| -> Result<usize> {
            if v.fract() == 0.0 && v >= 0.0 && v < 1e9 {
                Ok(v as usize)
            } else {
                Err(bad("expected a non-negative integer"))
            }
        };
        let unknown =
            |name: String| Error::config(format!("model.{key}: not a parameter of `{name}`"));
        let name = self.name();
        match self {
            LearnerSpec::Incremental { spec, undersample } => {
                if key == "keep_negative" {
                    *undersample = Some(value);
                    return Ok(());
                }
                let handled = match spec {
                    IncrementalSpec::Tree(c) => set_tree(c, key, value, count)?,
                    IncrementalSpec::Sgd(c) => set_sgd(c, key, value),
                    IncrementalSpec::LevBag(c) => match key {
                        "members" => {
                            c.members = count(value)?;
                            true
                        }
                        "lambda" => {
                            c.lambda = value;
                            true
                        }
                        "delta" => {
                            c.delta = Some(value);
                            true
                        }
                        _ => match &mut c.base {
                            BaseSpec::Tree(t) => set_tree(t, key, value, count)?,
                            BaseSpec::Linear(s) => set_sgd(s, key, value),
                        },
                    },
                    IncrementalSpec::Arf(c) => match key {
                        "members" => {
                            c.members = count(value)?;
                            true
                        }
                        "lambda" => {
                            c.lambda = value;
                            true
                        }
                        "warning_delta" | "drift_delta" => {
                            let (mut w, mut d) = c.detectors.unwrap_or((0.01, 0.001));
                            if key == "warning_delta" {
                                w = value;
                            } else {
                                d = value;
                            }
                            c.detectors = Some((w, d));
                            true
                        }
                        _ => set_tree(&mut c.tree, key, value, count)?,
                    },
                };
                if handled {
                    Ok(())
                } else {
                    Err(unknown(name))
                }
            }
            LearnerSpec::Batch {
                model,
                strategy,
                train_every,
            } => {
                match (key, &mut *strategy) {
                    ("train_every", _) => {
                        *train_every = count(value)?;
                        return Ok(());
                    }
                    ("stack_members", StrategyKind::Stack { members }) => {
                        *members = count(value)?;
                        return Ok(());
                    }
                    ("window", StrategyKind::Propagate { chunks }) => {
                        *chunks = count(value)?;
                        return Ok(());
                    }
                    _ => {}
                }
                let handled = match model {
                    ModelSpec::Gbdt(p) => match key {
                        "learning_rate" => {
                            p.learning_rate = value;
                            true
                        }
                        "max_depth" => {
                            p.max_depth = count(value)?;
                            true
                        }
                        "n_trees" => {
                            p.n_trees = count(value)?;
                            true
                        }
                        "lambda" => {
                            p.lambda = value;
                            true
                        }
                        "min_child_weight" => {
                            p.min_child_weight = value;
                            true
                        }
                        "patience" => {
                            p.patience = count(value)?;
                            true
                        }
                        _ => false,
                    },
                    ModelSpec::Cart(p) => match key {
                        "max_depth" => {
                            p.max_depth = count(value)?;
                            true
                        }
                        "min_samples_leaf" => {
                            p.min_samples_leaf = count(value)?;
                            true
                        }
                        _ => false,
                    },
                    ModelSpec::Linear(p) => match key {
                        "eta0" => {
                            p.eta0 = value;
                            true
                        }
                        "decay" => {
                            p.decay = value;
                            true
                        }
                        "epochs" => {
                            p.epochs = count(value)?;
                            true
                        }
                        "passes" => {
                            p.passes = count(value)?;
                            true
                        }
                        "l2" => {
                            p.l2 = value;
                            true
                        }
                        _ => false,
                    },
                };
                if handled {
                    Ok(())
                } else {
                    Err(unknown(name))
                }
            }
        }
    }

    pub fn apply(&mut self, params: &ParamSet) -> Result<()> {
        for (k, &v) in params {
            self.set_param(k, v)?;
        }
        self.validate()
    }

    /// Hyperparameter ranges explored by the tuner.
    pub fn search_space(&self) -> SearchSpace {
        use ParamRange::*;
        let tree = || {
            vec![
                ParamSpec::new("grace_period", Int { low: 50, high: 500 }),
                ParamSpec::new(
                    "split_confidence",
                    LogFloat {
                        low: 1e-9,
                        high: 1e-2,
                    },
                ),
                ParamSpec::new(
                    "tie_threshold",
                    Float {
                        low: 0.01,
                        high: 0.1,
                    },
                ),
                ParamSpec::new("max_depth", Int { low: 2, high: 6 }),
            ]
        };
        let sgd = || {
            vec![
                ParamSpec::new(
                    "learning_rate",
                    LogFloat {
                        low: 1e-3,
                        high: 0.5,
                    },
                ),
                ParamSpec::new(
                    "l2",
                    Float {
                        low: 0.0,
                        high: 1e-3,
                    },
                ),
            ]
        };
        let bagging = || {
            vec![
                ParamSpec::new("members", Int { low: 5, high: 30 }),
                ParamSpec::new(
                    "lambda",
                    Float {
                        low: 1.0,
                        high: 10.0,
                    },
                ),
            ]
        };
        let mut space = match self {
            LearnerSpec::Incremental { spec, .. } => match spec {
                IncrementalSpec::Tree(_) => tree(),
                IncrementalSpec::Sgd(_) => sgd(),
                IncrementalSpec::LevBag(c) => {
                    let mut s = bagging();
                    s.extend(match c.base {
                        BaseSpec::Tree(_) => tree(),
                        BaseSpec::Linear(_) => sgd(),
                    });
                    s
                }
                IncrementalSpec::Arf(_) => {
                    let mut s = bagging();
                    s.push(ParamSpec::new("grace_period", Int { low: 20, high: 300 }));
                    s.push(ParamSpec::new(
                        "split_confidence",
                        LogFloat {
                            low: 1e-7,
                            high: 0.1,
                        },
                    ));
                    s
                }
            },
            LearnerSpec::Batch { model, .. } => match model {
                ModelSpec::Gbdt(_) => vec![
                    ParamSpec::new(
                        "learning_rate",
                        LogFloat {
                            low: 0.01,
                            high: 0.5,
                        },
                    ),
                    ParamSpec::new("max_depth", Int { low: 1, high: 6 }),
                    ParamSpec::new("n_trees", Int { low: 10, high: 100 }),
                    ParamSpec::new(
                        "min_child_weight",
                        LogFloat {
                            low: 0.1,
                            high: 10.0,
                        },
                    ),
                    ParamSpec::new(
                        "lambda",
                        LogFloat {
                            low: 1e-3,
                            high: 10.0,
                        },
                    ),
                ],
                ModelSpec::Cart(_) => vec![
                    ParamSpec::new("max_depth", Int { low: 1, high: 6 }),
                    ParamSpec::new("min_samples_leaf", Int { low: 1, high: 50 }),
                ],
                ModelSpec::Linear(_) => vec![
                    ParamSpec::new(
                        "eta0",
                        LogFloat {
                            low: 1e-3,
                            high: 0.5,
                        },
                    ),
                    ParamSpec::new(
                        "decay",
                        LogFloat {
                            low: 1e-3,
                            high: 1.0,
                        },
                    ),
                    ParamSpec::new(
                        "l2",
                        Float {
                            low: 0.0,
                            high: 1e-3,
                        },
                    ),
                ],
            },
        };
        if let LearnerSpec::Incremental {
            undersample: Some(_),
            ..
        } = self
        {
            space.push(ParamSpec::new(
                "keep_negative",
                LogFloat {
                    low: 0.01,
                    high: 1.0,
                },
            ));
        }
        space
    }

    pub fn is_incremental(&self) -> bool {
        matches!(self, LearnerSpec::Incremental { .. })
    }
}

fn set_tree(
    c: &mut HoeffdingTreeConfig,
    key: &str,
    v: f64,
    count: impl Fn(f64) -> Result<usize>,
) -> Result<bool> {
    match key {
        "grace_period" => c.grace_period = v,
        "split_confidence" => c.split_confidence = v,
        "tie_threshold" => c.tie_threshold = v,
        "max_depth" => c.max_depth = count(v)?,
        "bins" => c.bins = count(v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_sgd(c: &mut SgdConfig, key: &str, v: f64) -> bool {
    match key {
        "learning_rate" => c.learning_rate = v,
        "l2" => c.l2 = v,
        "cost_positive" => c.cost_positive = v,
        _ => return false,
    }
    true
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Builds an instance-incremental learner.
pub fn build_incremental(
    spec: &IncrementalSpec,
    undersample: Option<f64>,
    seed: u64,
) -> Result<Box<dyn OnlineLearner>> {
    let inner: Box<dyn OnlineLearner> = match spec {
        IncrementalSpec::Tree(c) => Box::new(HoeffdingTree::new(c.clone(), seed)?),
        IncrementalSpec::Sgd(c) => Box::new(LogisticSgd::new(*c)?),
        IncrementalSpec::LevBag(c) => Box::new(LeveragingBagging::new(c.clone(), seed)?),
        IncrementalSpec::Arf(c) => Box::new(AdaptiveRandomForest::new(c.clone(), seed)?),
    };
    Ok(match undersample {
        Some(r) => Box::new(Undersample::new(inner, r, seed ^ 0x5eed)?),
        None => inner,
    })
}

/// A fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub stream: StreamSpec,
    pub delay: DelayModel,
    pub learner: LearnerSpec,
    pub metric: Metric,
    pub seed: u64,
    /// Wall-clock columns; off makes every output byte-deterministic.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(
        stream: StreamSpec,
        delay_factor: f64,
        learner: LearnerSpec,
        seed: u64,
    ) -> Result<Self> {
        let delay = DelayModel::poisson_with_unit(delay_factor, stream.delay_unit)?;
        Ok(Self {
            metric: stream.metric,
            stream,
            delay,
            learner,
            seed,
            timing: true,
        })
    }

    pub fn delay_factor(&self) -> f64 {
        self.delay.factor()
    }

    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        self.delay.validate()?;
        self.learner.validate()
    }
}

/// Materialised stream of one run.
#[derive(Debug, Clone)]
pub struct PreparedStream {
    pub offline: Vec<Instance>,
    /// Online part, ids re-based to start at 0.
    pub online: Vec<Instance>,
    pub delays: Vec<i64>,
    pub plan: ChunkPlan,
    /// Change points in online ids.
    pub change_points: Vec<u64>,
}

fn generate(stream: &StreamSpec, seed: RunSeed) -> Result<(Vec<Instance>, Option<Vec<i64>>)> {
    let n = stream.n_instances;
    let take = |mut g: Box<dyn StreamGenerator>| g.take_instances(n);
    Ok(match &stream.dataset {
        DatasetSpec::Agrawal(c) => (
            take(Box::new(AgrawalGenerator::new(c.clone(), seed)?)),
            None,
        ),
        DatasetSpec::Sea(c) => (take(Box::new(SeaGenerator::new(c.clone(), seed)?)), None),
        DatasetSpec::Hyperplane(c) => (
            take(Box::new(HyperplaneGenerator::new(c.clone(), seed)?)),
            None,
        ),
        DatasetSpec::RareEvent(c) => (
            take(Box::new(RareEventGenerator::new(c.clone(), seed)?)),
            None,
        ),
        DatasetSpec::Csv(path) => {
            let s = csv_replay(path, CsvSchema::default())?;
            (s.instances, s.delays)
        }
    })
}

pub fn prepare_stream(spec: &ExperimentSpec) -> Result<PreparedStream> {
    spec.validate()?;
    let seed = RunSeed::new(spec.seed);
    let (mut all, recorded_delays) = generate(&spec.stream, seed)?;
    let n_total = all.len() as u64;
    let n_offline = ((all.len() as f64) * spec.stream.offline_fraction).round() as usize;
    if n_offline == 0 || n_offline >= all.len() {
        return Err(Error::config(format!(
            "stream.offline_fraction leaves no offline or no online data for {} instances",
            all.len()
        )));
    }
    let mut online = all.split_off(n_offline);
    let offline = all;
    for (i, inst) in online.iter_mut().enumerate() {
        inst.id = i as u64;
    }
    let delays = match recorded_delays {
        Some(d) => d[n_offline..].to_vec(),
        None => {
            let mut rng = seed.substream(Substream::Delay);
            online
                .iter()
                .map(|inst| spec.delay.sample(inst.label, &mut rng) as i64)
                .collect()
        }
    };
    let plan = ChunkPlan::draw(
        online.len(),
        spec.stream.chunk_mean,
        &mut seed.substream(Substream::Chunking),
    )?;
    let change_points = spec
        .stream
        .dataset
        .change_points()
        .into_iter()
        .filter(|&cp| cp >= n_offline as u64 && cp < n_total)
        .map(|cp| cp - n_offline as u64)
        .collect();
    Ok(PreparedStream {
        offline,
        online,
        delays,
        plan,
        change_points,
    })
}

fn dataset_of(instances: &[Instance]) -> Dataset {
    Dataset {
        x: instances.iter().map(|i| i.features.clone()).collect(),
        y: instances.iter().map(|i| i.label).collect(),
    }
}

fn learner_seed(seed: u64) -> u64 {
    RunSeed::new(seed).substream(Substream::Learner).next_u64()
}

/// Learner built from the spec and pretrained on the offline reserve.
pub enum PretrainedLearner {
    Incremental(Box<dyn OnlineLearner>),
    Batch(Strategy),
}

impl PretrainedLearner {
    pub fn as_learner_ref(&mut self) -> LearnerRef<'_> {
        match self {
            PretrainedLearner::Incremental(l) => LearnerRef::Incremental(l.as_mut()),
            PretrainedLearner::Batch(s) => LearnerRef::Batch(s),
        }
    }
}

pub fn pretrain(spec: &ExperimentSpec, offline: &[Instance]) -> Result<PretrainedLearner> {
    match &spec.learner {
        LearnerSpec::Incremental {
            spec: inc,
            undersample,
        } => {
            let mut l = build_incremental(inc, *undersample, learner_seed(spec.seed))?;
            for inst in offline {
                l.learn_one(&inst.features, inst.label)?;
            }
            Ok(PretrainedLearner::Incremental(l))
        }
        LearnerSpec::Batch {
            model, strategy, ..
        } => {
            let mut s = Strategy::new(*strategy, *model, RunSeed::new(spec.seed))?;
            s.pretrain(&dataset_of(offline))?;
            Ok(PretrainedLearner::Batch(s))
        }
    }
}

pub fn run_options(spec: &ExperimentSpec) -> RunOptions {
    RunOptions {
        metric: spec.metric,
        train_every: match spec.learner {
            LearnerSpec::Batch { train_every, .. } => train_every,
            LearnerSpec::Incremental { .. } => 1,
        },
        timing: spec.timing,
        clock: None,
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub model: String,
    pub dataset: String,
    pub delay_factor: f64,
    pub run: RunOutput,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub runtime_s: f64,
    pub plan: ChunkPlan,
    pub change_points: Vec<u64>,
}

impl ExperimentOutput {
    pub fn values(&self) -> Vec<Option<f64>> {
        self.run.reports.iter().map(|r| r.value).collect()
    }
}

/// Generates the stream, pretrains, and evaluates under label delay.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let prepared = prepare_stream(spec)?;
    let mut learner = pretrain(spec, &prepared.offline)?;
    let events = schedule_events(&prepared.online, &prepared.delays)?;
    let run = run_stream(
        events,
        &prepared.plan,
        learner.as_learner_ref(),
        &run_options(spec),
    )?;
    let (mean, std) = mean_std(run.reports.iter().map(|r| r.value));
    Ok(ExperimentOutput {
        model: spec.learner.name(),
        dataset: spec.stream.name.clone(),
        delay_factor: spec.delay_factor(),
        run,
        mean,
        std,
        runtime_s: if spec.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        },
        plan: prepared.plan,
        change_points: prepared.change_points,
    })
}

/// Random search over the learner's space on the offline reserve:
/// prequential AUCROC for instance learners, 70/30 validation AUCROC for
/// batch learners. Returns the search and the tuned learner.
pub fn tune(spec: &ExperimentSpec, n_trials: usize) -> Result<(TuneResult, LearnerSpec)> {
    let prepared = prepare_stream(spec)?;
    let offline = &prepared.offline;
    let seed = RunSeed::new(spec.seed);
    let mut rng = seed.substream(Substream::Tuner);
    let space = spec.learner.search_space();
    let data = dataset_of(offline);
    let (train, val) = data.stratified_split(
        crate::batch::TRAIN_FRACTION,
        &mut seed.indexed(Substream::Tuner, 1),
    );
    let result = tune_random_search(&space, n_trials, &mut rng, |params| {
        let mut learner = spec.learner.clone();
        learner.apply(params)?;
        match &learner {
            LearnerSpec::Incremental {
                spec: inc,
                undersample,
            } => {
                let mut l = build_incremental(inc, *undersample, learner_seed(spec.seed))?;
                let mut scores = Vec::with_capacity(offline.len());
                for inst in offline {
                    scores.push(l.predict_proba(&inst.features)?);
                    l.learn_one(&inst.features, inst.label)?;
                }
                Ok(auc_roc(&scores, &data.y))
            }
            LearnerSpec::Batch { model, .. } => {
                let m = model.fit_split(&train, &val)?;
                let scores = val
                    .x
                    .iter()
                    .map(|r| m.predict_proba(r))
                    .collect::<Result<Vec<_>>>()?;
                Ok(auc_roc(&scores, &val.y))
            }
        }
    })?;
    let mut tuned = spec.learner.clone();
    tuned.apply(&result.best)?;
    Ok((result, tuned))
}
