//! Hoeffding tree with naive-Bayes-adaptive leaves, and its adaptive
//! variant that monitors every internal node with ADWIN and grows
//! alternate subtrees after an error increase.

use rand::seq::index::sample;
use rand::SeedableRng;

use super::adwin::{hoeffding_bound, Adwin};
use super::leaf_stats::{info_gain, ClassHistogram, Cut, GaussianEstimator};
use super::OnlineLearner;
use crate::error::{Error, Result};
use crate::stream::StreamRng;

const MIN_BRANCH_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafPrediction {
    MajorityClass,
    NaiveBayes,
    /// Naive Bayes unless majority-class has made strictly fewer errors at
    /// the leaf.
    NaiveBayesAdaptive,
}

/// Features a leaf may split on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSubset {
    All,
    /// `ceil(sqrt(p)) + 1`, the random-forest default.
    SqrtPlusOne,
    Count(usize),
}

impl FeatureSubset {
    pub fn resolve(self, dim: usize) -> usize {
        match self {
            FeatureSubset::All => dim,
            FeatureSubset::SqrtPlusOne => ((dim as f64).sqrt().ceil() as usize + 1).min(dim),
            FeatureSubset::Count(m) => m.clamp(1, dim.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub delta: f64,
    /// Instances an alternate subtree must see before it can replace or be
    /// discarded.
    pub min_alternate_samples: u64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            delta: 0.002,
            min_alternate_samples: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingTreeConfig {
    pub grace_period: f64,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    pub max_depth: usize,
    pub bins: usize,
    pub leaf_prediction: LeafPrediction,
    pub features: FeatureSubset,
    pub adaptive: Option<AdaptiveConfig>,
}

impl Default for HoeffdingTreeConfig {
    fn default() -> Self {
        Self {
            grace_period: 200.0,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            max_depth: 6,
            bins: 32,
            leaf_prediction: LeafPrediction::NaiveBayesAdaptive,
            features: FeatureSubset::All,
            adaptive: None,
        }
    }
}

impl HoeffdingTreeConfig {
    pub fn adaptive() -> Self {
        Self {
            adaptive: Some(AdaptiveConfig::default()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grace_period >= 1.0) {
            return Err(Error::config("tree grace_period must be >= 1"));
        }
        if !(self.split_confidence > 0.0 && self.split_confidence < 1.0) {
            return Err(Error::config("tree split_confidence must be in (0, 1)"));
        }
        if !(self.tie_threshold >= 0.0) {
            return Err(Error::config("tree tie_threshold must be >= 0"));
        }
        if self.bins < 2 {
            return Err(Error::config("tree bins must be >= 2"));
        }
        if let Some(a) = &self.adaptive {
            Adwin::new(a.delta)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct FeatureStats {
    hist: ClassHistogram,
    gauss: [GaussianEstimator; 2],
}

#[derive(Debug, Clone)]
struct Leaf {
    depth: usize,
    /// Class weights observed since this leaf was created.
    counts: [f64; 2],
    /// Branch distribution at creation, used until the leaf sees data.
    inherited: [f64; 2],
    last_eval: f64,
    stats: Vec<FeatureStats>,
    mask: Option<Vec<usize>>,
    mc_errors: f64,
    nb_errors: f64,
}

#[derive(Debug, Clone)]
struct Alternate {
    root: Node,
    errors: Adwin,
    seen: u64,
}

#[derive(Debug, Clone)]
struct Monitor {
    errors: Adwin,
    alternate: Option<Alternate>,
}

#[derive(Debug, Clone)]
struct SplitNode {
    feature: usize,
    threshold: f64,
    depth: usize,
    children: [Node; 2],
    monitor: Option<Monitor>,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Box<Leaf>),
    Split(Box<SplitNode>),
}

/// Structural counters, mostly for tests and reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeCounters {
    pub splits: u64,
    pub alternates_started: u64,
    pub alternates_swapped: u64,
    pub alternates_pruned: u64,
}

struct Ctx<'a> {
    cfg: &'a HoeffdingTreeConfig,
    dim: usize,
    rng: &'a mut StreamRng,
    counters: &'a mut TreeCounters,
}

impl Leaf {
    fn new(depth: usize, inherited: [f64; 2], ctx: &mut Ctx<'_>) -> Self {
        let m = ctx.cfg.features.resolve(ctx.dim);
        let mask = (m < ctx.dim).then(|| {
            let mut idx = sample(ctx.rng, ctx.dim, m).into_vec();
            idx.sort_unstable();
            idx
        });
        Self {
            depth,
            counts: [0.0; 2],
            inherited,
            last_eval: 0.0,
            stats: (0..ctx.dim)
                .map(|_| FeatureStats {
                    hist: ClassHistogram::new(ctx.cfg.bins),
                    gauss: Default::default(),
                })
                .collect(),
            mask,
            mc_errors: 0.0,
            nb_errors: 0.0,
        }
    }

    fn weight(&self) -> f64 {
        self.counts[0] + self.counts[1]
    }

    fn distribution(&self) -> [f64; 2] {
        if self.weight() > 0.0 {
            self.counts
        } else {
            self.inherited
        }
    }

    fn mc_proba(&self) -> f64 {
        let d = self.distribution();
        let n = d[0] + d[1];
        if n > 0.0 {
            d[1] / n
        } else {
            0.5
        }
    }

    fn nb_proba(&self, x: &[f64]) -> f64 {
        if self.weight() <= 0.0 {
            return self.mc_proba();
        }
        let n = self.weight();
        let mut log = [
            ((self.counts[0] + 1.0) / (n + 2.0)).ln(),
            ((self.counts[1] + 1.0) / (n + 2.0)).ln(),
        ];
        for (s, &v) in self.stats.iter().zip(x) {
            if s.gauss[0].weight() >= 2.0 && s.gauss[1].weight() >= 2.0 {
                log[0] += s.gauss[0].log_pdf(v);
                log[1] += s.gauss[1].log_pdf(v);
            }
        }
        1.0 / (1.0 + (log[0] - log[1]).exp())
    }

    fn proba(&self, x: &[f64], mode: LeafPrediction) -> f64 {
        match mode {
            LeafPrediction::MajorityClass => self.mc_proba(),
            LeafPrediction::NaiveBayes => self.nb_proba(x),
            LeafPrediction::NaiveBayesAdaptive => {
                if self.mc_errors < self.nb_errors {
                    self.mc_proba()
                } else {
                    self.nb_proba(x)
                }
            }
        }
    }

    fn learn(&mut self, x: &[f64], y: bool, w: f64, cfg: &HoeffdingTreeConfig) {
        if cfg.leaf_prediction == LeafPrediction::NaiveBayesAdaptive {
            let d = self.distribution();
            if (d[1] > d[0]) != y {
                self.mc_errors += w;
            }
            if (self.nb_proba(x) > 0.5) != y {
                self.nb_errors += w;
            }
        }
        self.counts[y as usize] += w;
        let collect_hist = self.depth < cfg.max_depth;
        for (s, &v) in self.stats.iter_mut().zip(x) {
            s.gauss[y as usize].update(v, w);
            if collect_hist {
                s.hist.insert(v, y, w);
            }
        }
    }

    /// Best split if the Hoeffding test licenses one.
    fn try_split(&mut self, cfg: &HoeffdingTreeConfig) -> Option<(usize, Cut)> {
        if self.depth >= cfg.max_depth {
            return None;
        }
        let n = self.weight();
        if n - self.last_eval < cfg.grace_period {
            return None;
        }
        self.last_eval = n;
        if self.counts[0] <= 0.0 || self.counts[1] <= 0.0 {
            return None;
        }
        let all: Vec<usize>;
        let candidates = match &self.mask {
            Some(m) => m.as_slice(),
            None => {
                all = (0..self.stats.len()).collect();
                &all
            }
        };
        let mut per_feature: Vec<(f64, usize, Cut)> = Vec::with_capacity(candidates.len());
        for &f in candidates {
            let mut best: Option<(f64, Cut)> = None;
            for cut in self.stats[f].hist.cuts() {
                if let Some(g) = info_gain(self.counts, &cut, MIN_BRANCH_FRACTION) {
                    if best.map_or(true, |(bg, _)| g > bg) {
                        best = Some((g, cut));
                    }
                }
            }
            if let Some((g, cut)) = best {
                per_feature.push((g, f, cut));
            }
        }
        // stable: equal merits keep ascending feature order
        per_feature.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (best_gain, feature, cut) = *per_feature.first()?;
        let second = per_feature.get(1).map_or(0.0, |s| s.0);
        let eps = hoeffding_bound(1.0, cfg.split_confidence, n).ok()?;
        if best_gain > 0.0 && (best_gain - second > eps || eps < cfg.tie_threshold) {
            Some((feature, cut))
        } else {
            None
        }
    }
}

impl Node {
    fn leaf_for(&self, x: &[f64]) -> &Leaf {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(l) => return l,
                Node::Split(s) => node = &s.children[route(s, x)],
            }
        }
    }

    fn max_depth(&self) -> usize {
        match self {
            Node::Leaf(l) => l.depth,
            Node::Split(s) => s
                .children
                .iter()
                .map(Node::max_depth)
                .max()
                .unwrap_or(s.depth),
        }
    }

    fn count_leaves(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split(s) => s.children.iter().map(Node::count_leaves).sum(),
        }
    }

    fn root_split(&self) -> Option<(usize, f64)> {
        match self {
            Node::Leaf(_) => None,
            Node::Split(s) => Some((s.feature, s.threshold)),
        }
    }
}

fn route(s: &SplitNode, x: &[f64]) -> usize {
    (x[s.feature] > s.threshold) as usize
}

fn predicted_wrong(root: &Node, x: &[f64], y: bool, mode: LeafPrediction) -> bool {
    (root.leaf_for(x).proba(x, mode) >= 0.5) != y
}

/// Trains `node` on one instance. `error` is the 0/1 loss of the enclosing
/// tree's prediction for this instance (adaptive trees only).
fn learn_node(
    node: &mut Node,
    x: &[f64],
    y: bool,
    w: f64,
    error: Option<bool>,
    allow_alternate: bool,
    ctx: &mut Ctx<'_>,
) {
    let mut replacement = None;
    match node {
        Node::Leaf(leaf) => {
            leaf.learn(x, y, w, ctx.cfg);
            if let Some((feature, cut)) = leaf.try_split(ctx.cfg) {
                let depth = leaf.depth;
                let children = [
                    Node::Leaf(Box::new(Leaf::new(depth + 1, cut.left, ctx))),
                    Node::Leaf(Box::new(Leaf::new(depth + 1, cut.right, ctx))),
                ];
                let monitor = ctx.cfg.adaptive.map(|a| Monitor {
                    errors: Adwin::new(a.delta).expect("validated delta"),
                    alternate: None,
                });
                ctx.counters.splits += 1;
                replacement = Some(Node::Split(Box::new(SplitNode {
                    feature,
                    threshold: cut.threshold,
                    depth,
                    children,
                    monitor,
                })));
            }
        }
        Node::Split(split) => {
            if let (Some(monitor), Some(err), Some(acfg)) =
                (split.monitor.as_mut(), error, ctx.cfg.adaptive)
            {
                let before = monitor.errors.estimation();
                let cut = monitor.errors.update(err as u8 as f64).expect("0/1 input");
                if cut
                    && allow_alternate
                    && monitor.alternate.is_none()
                    && monitor.errors.estimation() > before
                {
                    let root = Node::Leaf(Box::new(Leaf::new(split.depth, [0.0; 2], ctx)));
                    monitor.alternate = Some(Alternate {
                        root,
                        errors: Adwin::new(acfg.delta).expect("validated delta"),
                        seen: 0,
                    });
                    ctx.counters.alternates_started += 1;
                }
                let mut outcome = None;
                if let Some(alt) = monitor.alternate.as_mut() {
                    let alt_err = predicted_wrong(&alt.root, x, y, ctx.cfg.leaf_prediction);
                    alt.errors.update(alt_err as u8 as f64).expect("0/1 input");
                    learn_node(&mut alt.root, x, y, w, Some(alt_err), false, ctx);
                    alt.seen += 1;
                    if alt.seen >= acfg.min_alternate_samples {
                        let alt_rate = alt.errors.estimation();
                        let own_rate = monitor.errors.estimation();
                        if alt_rate < own_rate {
                            outcome = Some(true);
                        } else {
                            let n_alt = alt.errors.width().max(1) as f64;
                            let n_own = monitor.errors.width().max(1) as f64;
                            let bound = ((2.0 / acfg.delta).ln() / 2.0
                                * (1.0 / n_alt + 1.0 / n_own))
                                .sqrt();
                            if alt_rate > own_rate + bound {
                                outcome = Some(false);
                            }
                        }
                    }
                }
                match outcome {
                    Some(true) => {
                        let alt = monitor.alternate.take().expect("alternate present");
                        ctx.counters.alternates_swapped += 1;
                        replacement = Some(alt.root);
                    }
                    Some(false) => {
                        monitor.alternate = None;
                        ctx.counters.alternates_pruned += 1;
                    }
                    None => {}
                }
            }
            if replacement.is_none() {
                let child = route(split, x);
                learn_node(
                    &mut split.children[child],
                    x,
                    y,
                    w,
                    error,
                    allow_alternate,
                    ctx,
                );
            }
        }
    }
    if let Some(r) = replacement {
        *node = r;
    }
}

#[derive(Debug, Clone)]
pub struct HoeffdingTree {
    config: HoeffdingTreeConfig,
    root: Option<Node>,
    dim: Option<usize>,
    rng: StreamRng,
    counters: TreeCounters,
}

impl HoeffdingTree {
    pub fn new(config: HoeffdingTreeConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            root: None,
            dim: None,
            rng: StreamRng::seed_from_u64(seed),
            counters: TreeCounters::default(),
        })
    }

    pub fn config(&self) -> &HoeffdingTreeConfig {
        &self.config
    }

    pub fn counters(&self) -> TreeCounters {
        self.counters
    }

    pub fn depth(&self) -> usize {
        self.root.as_ref().map_or(0, Node::max_depth)
    }

    pub fn n_leaves(&self) -> usize {
        self.root.as_ref().map_or(1, Node::count_leaves)
    }

    /// Feature and threshold of the root split, if the root has split.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        self.root.as_ref().and_then(Node::root_split)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.dim {
            Some(d) if d != x.len() => Err(Error::Dimension {
                expected: d,
                got: x.len(),
            }),
            _ => Ok(()),
        }
    }
}

impl OnlineLearner for HoeffdingTree {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match &self.root {
            None => 0.5,
            Some(root) => root
                .leaf_for(x)
                .proba(x, self.config.leaf_prediction)
                .clamp(0.0, 1.0),
        })
    }

    fn learn_weighted(&mut self, x: &[f64], y: bool, weight: u32) -> Result<()> {
        self.check_dim(x)?;
        if weight == 0 {
            return Ok(());
        }
        let dim = x.len();
        self.dim = Some(dim);
        let mut ctx = Ctx {
            cfg: &self.config,
            dim,
            rng: &mut self.rng,
            counters: &mut self.counters,
        };
        let root = self
            .root
            .get_or_insert_with(|| Node::Leaf(Box::new(Leaf::new(0, [0.0; 2], &mut ctx))));
        let error = ctx
            .cfg
            .adaptive
            .map(|_| predicted_wrong(root, x, y, ctx.cfg.leaf_prediction));
        learn_node(root, x, y, weight as f64, error, true, &mut ctx);
        Ok(())
    }
}
