//! Per-leaf sufficient statistics for numeric attributes.

/// One bin of a [`ClassHistogram`]: the weighted mean of the values merged
/// into it and their per-class weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub value: f64,
    pub counts: [f64; 2],
}

impl Bin {
    fn total(&self) -> f64 {
        self.counts[0] + self.counts[1]
    }
}

/// Streaming class-conditional histogram with at most `max_bins` bins.
///
/// Overflow merges the adjacent pair with the smallest combined weight
/// (lowest index on ties), which drives the bins towards equal frequency.
/// Repeated values land in the same bin, so attributes with at most
/// `max_bins` distinct values are represented exactly.
#[derive(Debug, Clone)]
pub struct ClassHistogram {
    bins: Vec<Bin>,
    max_bins: usize,
}

/// Candidate binary split `x <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub threshold: f64,
    pub left: [f64; 2],
    pub right: [f64; 2],
}

impl ClassHistogram {
    pub fn new(max_bins: usize) -> Self {
        assert!(max_bins >= 2);
        Self {
            bins: Vec::with_capacity(max_bins + 1),
            max_bins,
        }
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn insert(&mut self, value: f64, class: bool, weight: f64) {
        let c = class as usize;
        match self.bins.binary_search_by(|b| b.value.total_cmp(&value)) {
            Ok(i) => self.bins[i].counts[c] += weight,
            Err(i) => {
                let mut counts = [0.0; 2];
                counts[c] = weight;
                self.bins.insert(i, Bin { value, counts });
                if self.bins.len() > self.max_bins {
                    self.merge_lightest_pair();
                }
            }
        }
    }

    fn merge_lightest_pair(&mut self) {
        let mut best = 0;
        let mut best_w = f64::INFINITY;
        for i in 0..self.bins.len() - 1 {
            let w = self.bins[i].total() + self.bins[i + 1].total();
            if w < best_w {
                best_w = w;
                best = i;
            }
        }
        let b = self.bins.remove(best + 1);
        let a = &mut self.bins[best];
        let (wa, wb) = (a.total(), b.total());
        a.value = if wa + wb > 0.0 {
            (a.value * wa + b.value * wb) / (wa + wb)
        } else {
            0.5 * (a.value + b.value)
        };
        a.counts[0] += b.counts[0];
        a.counts[1] += b.counts[1];
    }

    /// Splits between consecutive bins, thresholds ascending.
    pub fn cuts(&self) -> Vec<Cut> {
        let mut total = [0.0; 2];
        for b in &self.bins {
            total[0] += b.counts[0];
            total[1] += b.counts[1];
        }
        let mut left = [0.0; 2];
        let mut out = Vec::with_capacity(self.bins.len().saturating_sub(1));
        for pair in self.bins.windows(2) {
            left[0] += pair[0].counts[0];
            left[1] += pair[0].counts[1];
            out.push(Cut {
                threshold: 0.5 * (pair[0].value + pair[1].value),
                left,
                right: [total[0] - left[0], total[1] - left[1]],
            });
        }
        out
    }
}

/// Weighted running mean and variance (West's update).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GaussianEstimator {
    weight: f64,
    mean: f64,
    m2: f64,
}

impl GaussianEstimator {
    pub fn update(&mut self, x: f64, w: f64) {
        if w <= 0.0 {
            return;
        }
        self.weight += w;
        let delta = x - self.mean;
        self.mean += w * delta / self.weight;
        self.m2 += w * delta * (x - self.mean);
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.weight > 1.0 {
            self.m2 / (self.weight - 1.0)
        } else {
            0.0
        }
    }

    /// Log density with a variance floor scaled to the attribute magnitude.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let floor = 1e-6 * (1.0 + self.mean * self.mean);
        let var = self.variance().max(floor);
        -0.5 * ((x - self.mean).powi(2) / var + (2.0 * std::f64::consts::PI * var).ln())
    }
}

pub(crate) fn entropy(counts: [f64; 2]) -> f64 {
    let n = counts[0] + counts[1];
    if n <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of a binary split, or `None` when either branch holds
/// less than `min_branch_fraction` of the weight.
pub(crate) fn info_gain(parent: [f64; 2], cut: &Cut, min_branch_fraction: f64) -> Option<f64> {
    let n = parent[0] + parent[1];
    let nl = cut.left[0] + cut.left[1];
    let nr = cut.right[0] + cut.right[1];
    if n <= 0.0 || nl < min_branch_fraction * n || nr < min_branch_fraction * n {
        return None;
    }
    Some(entropy(parent) - (nl / n) * entropy(cut.left) - (nr / n) * entropy(cut.right))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_values_stay_exact() {
        let mut h = ClassHistogram::new(32);
        for i in 0..1000 {
            h.insert((i % 5) as f64, i % 3 == 0, 1.0);
        }
        assert_eq!(h.bins().len(), 5);
        let total: f64 = h.bins().iter().map(|b| b.counts[0] + b.counts[1]).sum();
        assert_eq!(total, 1000.0);
        let cuts = h.cuts();
        assert_eq!(cuts.len(), 4);
        assert_eq!(cuts[0].threshold, 0.5);
        assert_eq!(cuts[0].left[0] + cuts[0].left[1], 200.0);
    }

    #[test]
    fn bins_are_bounded_and_roughly_equal_frequency() {
        let mut h = ClassHistogram::new(32);
        for i in 0..10_000u64 {
            // deterministic scramble of [0, 1)
            let v = ((i * 7919) % 10_000) as f64 / 10_000.0;
            h.insert(v, v > 0.5, 1.0);
        }
        assert_eq!(h.bins().len(), 32);
        let weights: Vec<f64> = h.bins().iter().map(|b| b.counts[0] + b.counts[1]).collect();
        let max = weights.iter().cloned().fold(0.0, f64::max);
        assert!(max < 10_000.0 / 32.0 * 3.0, "bin weights {weights:?}");
        assert!(h.bins().windows(2).all(|w| w[0].value < w[1].value));
    }

    #[test]
    fn gaussian_moments() {
        let mut g = GaussianEstimator::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            g.update(x, 1.0);
        }
        assert!((g.mean() - 2.5).abs() < 1e-12);
        assert!((g.variance() - 5.0 / 3.0).abs() < 1e-12);
        let mut weighted = GaussianEstimator::default();
        weighted.update(1.0, 2.0);
        weighted.update(4.0, 1.0);
        assert!((weighted.mean() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gain_of_perfect_split_is_one_bit() {
        let cut = Cut {
            threshold: 0.0,
            left: [10.0, 0.0],
            right: [0.0, 10.0],
        };
        assert!((info_gain([10.0, 10.0], &cut, 0.01).unwrap() - 1.0).abs() < 1e-12);
        let lopsided = Cut {
            threshold: 0.0,
            left: [0.0, 0.0],
            right: [10.0, 10.0],
        };
        assert!(info_gain([10.0, 10.0], &lopsided, 0.01).is_none());
    }
}
