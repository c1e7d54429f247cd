//! Gradient-boosted trees for logistic loss on quantile-binned features.

use super::{check_dim, sigmoid, Dataset};
use crate::error::{Error, Result};

pub const MAX_TREES: usize = 100;
pub const MAX_DEPTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbdtParams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_trees: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub min_child_weight: f64,
    /// Rounds without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub max_bins: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_depth: 6,
            n_trees: 100,
            lambda: 1.0,
            min_child_weight: 1.0,
            patience: 10,
            max_bins: 256,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::config("gbdt learning_rate must be in (0, 1]"));
        }
        if !(1..=MAX_DEPTH).contains(&self.max_depth) {
            return Err(Error::config(format!(
                "gbdt max_depth must be in 1..={MAX_DEPTH}"
            )));
        }
        if !(1..=MAX_TREES).contains(&self.n_trees) {
            return Err(Error::config(format!(
                "gbdt n_trees must be in 1..={MAX_TREES}"
            )));
        }
        if !(self.lambda >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::config(
                "gbdt lambda and min_child_weight must be >= 0",
            ));
        }
        if !(2..=256).contains(&self.max_bins) {
            return Err(Error::config("gbdt max_bins must be in 2..=256"));
        }
        Ok(())
    }
}

/// Per-feature cut points; value `v` falls in bin `#{cuts < v}`, so bin
/// `<= b` is equivalent to `v <= cuts[b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBins {
    cuts: Vec<Vec<f64>>,
}

impl QuantileBins {
    pub fn fit(data: &Dataset, max_bins: usize) -> Self {
        let n = data.len();
        let cuts = (0..data.dim())
            .map(|f| {
                let mut v: Vec<f64> = data.x.iter().map(|r| r[f]).collect();
                v.sort_by(f64::total_cmp);
                let mut uniq = v.clone();
                uniq.dedup();
                if uniq.len() <= max_bins {
                    uniq.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
                } else {
                    let mut c: Vec<f64> = (1..max_bins).map(|k| v[k * n / max_bins]).collect();
                    c.dedup();
                    // the top value as a cut would leave an empty right bin
                    if c.last() == v.last() {
                        c.pop();
                    }
                    c
                }
            })
            .collect();
        Self { cuts }
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }

    pub fn bin(&self, feature: usize, v: f64) -> usize {
        self.cuts[feature].partition_point(|&c| c < v)
    }

    pub fn cut(&self, feature: usize, b: usize) -> f64 {
        self.cuts[feature][b]
    }
}

#[derive(Debug, Clone, PartialEq)]
enum GbNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct RegTree {
    nodes: Vec<GbNode>,
}

impl RegTree {
    fn score(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                GbNode::Leaf(v) => return *v,
                GbNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    fn depth(&self) -> usize {
        fn walk(nodes: &[GbNode], i: usize) -> usize {
            match &nodes[i] {
                GbNode::Leaf(_) => 0,
                GbNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    base_score: f64,
    trees: Vec<RegTree>,
    dim: usize,
    train_loss: Vec<f64>,
    val_loss: Vec<f64>,
}

fn logloss(scores: &[f64], y: &[bool]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(&f, &yi)| {
            // log(1 + e^-z) with z = ±f, stable for large |f|
            let z = if yi { f } else { -f };
            if z > 0.0 {
                (-z).exp().ln_1p()
            } else {
                -z + z.exp().ln_1p()
            }
        })
        .sum();
    total / scores.len().max(1) as f64
}

struct Grower<'a> {
    bins: &'a QuantileBins,
    binned: &'a [Vec<u16>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbdtParams,
    nodes: Vec<GbNode>,
}

impl Grower<'_> {
    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.lambda) * self.params.learning_rate
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &i| {
            (g + self.grad[i], h + self.hess[i])
        });
        let id = self.nodes.len();
        self.nodes.push(GbNode::Leaf(self.leaf_value(g, h)));
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }
        let lambda = self.params.lambda;
        let parent = g * g / (h + lambda);
        let mut best: Option<(usize, usize, f64)> = None;
        for (f, col) in self.binned.iter().enumerate() {
            let nb = self.bins.n_bins(f);
            let mut hist = vec![(0.0f64, 0.0f64, 0usize); nb];
            for &i in &rows {
                let e = &mut hist[col[i] as usize];
                e.0 += self.grad[i];
                e.1 += self.hess[i];
                e.2 += 1;
            }
            let (mut gl, mut hl, mut cl) = (0.0, 0.0, 0usize);
            for (b, e) in hist.iter().enumerate().take(nb - 1) {
                gl += e.0;
                hl += e.1;
                cl += e.2;
                let (gr, hr) = (g - gl, h - hl);
                if cl == 0 || cl == rows.len() {
                    continue;
                }
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if best.map_or(true, |bst| gain > bst.2) {
                    best = Some((f, b, gain));
                }
            }
        }
        let Some((feature, b, gain)) = best else {
            return id;
        };
        if gain <= 1e-12 {
            return id;
        }
        let col = &self.binned[feature];
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i] as usize <= b);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = GbNode::Split {
            feature,
            threshold: self.bins.cut(feature, b),
            left,
            right,
        };
        id
    }
}

impl GbdtModel {
    /// Fits on `train`, early-stopping on `val` when it is non-empty.
    pub fn fit(train: &Dataset, val: &Dataset, params: GbdtParams) -> Result<Self> {
        params.validate()?;
        if train.is_empty() {
            return Err(Error::invalid(
                "cannot fit boosted trees on an empty training set",
            ));
        }
        let dim = train.dim();
        if !val.is_empty() && val.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: val.dim(),
            });
        }
        let n = train.len();
        let p = (train.positives() as f64 / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (p / (1.0 - p)).ln();
        let mut model = Self {
            base_score,
            trees: Vec::new(),
            dim,
            train_loss: Vec::new(),
            val_loss: Vec::new(),
        };
        let mut f_train = vec![base_score; n];
        model.train_loss.push(logloss(&f_train, &train.y));
        if train.positives() == 0 || train.positives() == n {
            return Ok(model);
        }

        let bins = QuantileBins::fit(train, params.max_bins);
        let binned: Vec<Vec<u16>> = (0..dim)
            .map(|f| train.x.iter().map(|r| bins.bin(f, r[f]) as u16).collect())
            .collect();
        let mut f_val = vec![base_score; val.len()];
        let mut best = (f64::INFINITY, 0usize);
        if !val.is_empty() {
            let l = logloss(&f_val, &val.y);
            model.val_loss.push(l);
            best = (l, 0);
        }
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for round in 1..=params.n_trees {
            for i in 0..n {
                let pr = sigmoid(f_train[i]);
                grad[i] = pr - train.y[i] as u8 as f64;
                hess[i] = (pr * (1.0 - pr)).max(1e-16);
            }
            let mut grower = Grower {
                bins: &bins,
                binned: &binned,
                grad: &grad,
                hess: &hess,
                params: &params,
                nodes: Vec::new(),
            };
            grower.grow((0..n).collect(), 0);
            let tree = RegTree {
                nodes: grower.nodes,
            };
            for (fi, row) in f_train.iter_mut().zip(&train.x) {
                *fi += tree.score(row);
            }
            model.train_loss.push(logloss(&f_train, &train.y));
            for (fi, row) in f_val.iter_mut().zip(&val.x) {
                *fi += tree.score(row);
            }
            model.trees.push(tree);
            if !val.is_empty() {
                let l = logloss(&f_val, &val.y);
                model.val_loss.push(l);
                if l < best.0 {
                    best = (l, round);
                } else if params.patience > 0 && round - best.1 >= params.patience {
                    model.trees.truncate(best.1);
                    break;
                }
            }
        }
        Ok(model)
    }

    pub fn raw_score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok(self.base_score + self.trees.iter().map(|t| t.score(x)).sum::<f64>())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.raw_score(x)?))
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(RegTree::depth).max().unwrap_or(0)
    }

    /// Mean training log-loss before the first tree and after each round.
    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }

    pub fn val_loss(&self) -> &[f64] {
        &self.val_loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::auc_roc;
    use crate::stream::{RunSeed, Substream};
    use rand::Rng;

    fn noisy(seed: u64, n: usize, noise: f64) -> Dataset {
        let mut rng = RunSeed::new(seed).substream(Substream::Learner);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen(), rng.gen(), rng.gen()])
            .collect();
        let y = x
            .iter()
            .map(|r| (r[0] + r[1] > 1.0) != (rng.gen::<f64>() < noise))
            .collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn stump_separates_1d_data() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..100).map(|i| i >= 40).collect();
        let d = Dataset::new(x, y).unwrap();
        let params = GbdtParams {
            n_trees: 1,
            max_depth: 1,
            ..GbdtParams::default()
        };
        let m = GbdtModel::fit(&d, &Dataset::default(), params).unwrap();
        assert_eq!(m.n_trees(), 1);
        let scores: Vec<f64> = d.x.iter().map(|r| m.predict_proba(r).unwrap()).collect();
        assert_eq!(auc_roc(&scores, &d.y), Some(1.0));
    }

    #[test]
    fn training_loss_never_increases() {
        let d = noisy(1, 2000, 0.1);
        let m = GbdtModel::fit(&d, &Dataset::default(), GbdtParams::default()).unwrap();
        assert_eq!(m.n_trees(), 100);
        for w in m.train_loss().windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        assert!(m.max_depth() <= 6);
    }

    #[test]
    fn early_stopping_engages() {
        // pure-noise labels: validation loss stops improving quickly
        let mut rng = RunSeed::new(2).substream(Substream::Learner);
        let mk = |rng: &mut crate::stream::StreamRng, n: usize| {
            let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
            let y = (0..n).map(|_| rng.gen::<bool>()).collect();
            Dataset::new(x, y).unwrap()
        };
        let tr = mk(&mut rng, 700);
        let va = mk(&mut rng, 300);
        let params = GbdtParams {
            patience: 5,
            learning_rate: 0.3,
            ..GbdtParams::default()
        };
        let m = GbdtModel::fit(&tr, &va, params).unwrap();
        assert!(m.n_trees() < 100);
        let best = m.val_loss().iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(m.val_loss()[m.n_trees()], best);
    }

    #[test]
    fn single_class_gives_constant_model() {
        let d = Dataset::new(vec![vec![1.0], vec![2.0]], vec![false, false]).unwrap();
        let m = GbdtModel::fit(&d, &Dataset::default(), GbdtParams::default()).unwrap();
        assert_eq!(m.n_trees(), 0);
        let p = m.predict_proba(&[5.0]).unwrap();
        assert!(p > 0.0 && p < 1e-5);
    }

    #[test]
    fn probabilities_monotone_in_score() {
        let d = noisy(3, 500, 0.05);
        let m = GbdtModel::fit(&d, &Dataset::default(), GbdtParams::default()).unwrap();
        let mut pairs: Vec<(f64, f64)> = noisy(4, 200, 0.0)
            .x
            .iter()
            .map(|r| (m.raw_score(r).unwrap(), m.predict_proba(r).unwrap()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(pairs.iter().all(|p| p.1 > 0.0 && p.1 < 1.0));
    }

    #[test]
    fn bins_are_bounded() {
        let d = noisy(5, 5000, 0.0);
        let b = QuantileBins::fit(&d, 256);
        assert!(b.n_bins(0) <= 256);
        assert!(b.n_bins(0) > 200);
        let small = Dataset::new(
            vec![vec![1.0], vec![2.0], vec![2.0]],
            vec![true, false, true],
        )
        .unwrap();
        let b = QuantileBins::fit(&small, 256);
        assert_eq!(b.n_bins(0), 2);
        assert_eq!(b.bin(0, 1.0), 0);
        assert_eq!(b.bin(0, 2.0), 1);
    }

    #[test]
    fn invalid_params() {
        let d = noisy(6, 10, 0.0);
        for p in [
            GbdtParams {
                n_trees: 101,
                ..GbdtParams::default()
            },
            GbdtParams {
                max_depth: 7,
                ..GbdtParams::default()
            },
            GbdtParams {
                learning_rate: 0.0,
                ..GbdtParams::default()
            },
        ] {
            assert!(GbdtModel::fit(&d, &Dataset::default(), p).is_err());
        }
        assert!(GbdtModel::fit(
            &Dataset::default(),
            &Dataset::default(),
            GbdtParams::default()
        )
        .is_err());
    }
}
