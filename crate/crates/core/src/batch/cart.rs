//! CART classification tree with Gini splits.

use super::{check_dim, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_samples_leaf: 1,
        }
    }
}

impl CartParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::config("cart min_samples_leaf must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CartNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartModel {
    nodes: Vec<CartNode>,
    dim: usize,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    data: &'a Dataset,
    params: CartParams,
    nodes: Vec<CartNode>,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len() as f64;
        let pos = idx.iter().filter(|&&i| self.data.y[i]).count() as f64;
        let parent = gini(pos, n);
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in 0..self.data.dim() {
            let x = &self.data.x;
            sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            let mut left_pos = 0.0;
            for k in 0..sorted.len() - 1 {
                left_pos += self.data.y[sorted[k]] as u8 as f64;
                let (v, next) = (x[sorted[k]][f], x[sorted[k + 1]][f]);
                let n_left = k + 1;
                if v == next || n_left < min_leaf || sorted.len() - n_left < min_leaf {
                    continue;
                }
                let nl = n_left as f64;
                let nr = n - nl;
                let gain =
                    parent - (nl / n) * gini(left_pos, nl) - (nr / n) * gini(pos - left_pos, nr);
                if best.map_or(true, |b| gain > b.2) {
                    best = Some((f, 0.5 * (v + next), gain));
                }
            }
        }
        best.filter(|b| b.2 > -1e-12)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let pos = idx.iter().filter(|&&i| self.data.y[i]).count();
        let leaf = CartNode::Leaf(pos as f64 / idx.len() as f64);
        let id = self.nodes.len();
        self.nodes.push(leaf);
        if depth >= self.params.max_depth || pos == 0 || pos == idx.len() {
            return id;
        }
        if let Some((feature, threshold, _)) = self.best_split(&idx) {
            let (l, r): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| self.data.x[i][feature] <= threshold);
            let left = self.grow(l, depth + 1);
            let right = self.grow(r, depth + 1);
            self.nodes[id] = CartNode::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        id
    }
}

impl CartModel {
    pub fn fit(data: &Dataset, params: CartParams) -> Result<Self> {
        params.validate()?;
        if data.is_empty() {
            return Err(Error::invalid("cannot fit a tree on an empty batch"));
        }
        let mut b = Builder {
            data,
            params,
            nodes: Vec::new(),
        };
        b.grow((0..data.len()).collect(), 0);
        Ok(Self {
            nodes: b.nodes,
            dim: data.dim(),
        })
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                CartNode::Leaf(p) => return Ok(*p),
                CartNode::Split {
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

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[CartNode], i: usize) -> usize {
            match &nodes[i] {
                CartNode::Leaf(_) => 0,
                CartNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}
