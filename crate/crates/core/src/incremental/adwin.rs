//! ADWIN change detector over an exponential histogram of buckets.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const MAX_BUCKETS_PER_ROW: usize = 5;
const MIN_SUBWINDOW: u64 = 5;

#[derive(Debug, Clone)]
pub struct Adwin {
    delta: f64,
    /// `rows[i]` holds bucket sums of `2^i` values each; within a row the
    /// front is the oldest bucket.
    rows: Vec<VecDeque<f64>>,
    total: f64,
    width: u64,
    detections: u64,
}

impl Default for Adwin {
    fn default() -> Self {
        Self::new(0.002).expect("valid default delta")
    }
}

impl Adwin {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config(format!(
                "adwin delta must be in (0, 1), got {delta}"
            )));
        }
        Ok(Self {
            delta,
            rows: Vec::new(),
            total: 0.0,
            width: 0,
            detections: 0,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Mean of the current window (0 when empty).
    pub fn estimation(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    pub fn detections(&self) -> u64 {
        self.detections
    }

    pub fn bucket_count(&self) -> usize {
        self.rows.iter().map(VecDeque::len).sum()
    }

    #[cfg(test)]
    fn row_lengths(&self) -> Vec<usize> {
        self.rows.iter().map(VecDeque::len).collect()
    }

    /// Adds `value` and shrinks the window while some split into an older
    /// part W0 and a newer part W1 has `|mean(W0) - mean(W1)| >= eps_cut`.
    /// Returns whether the window was cut.
    pub fn update(&mut self, value: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid(format!(
                "adwin input must lie in [0, 1], got {value}"
            )));
        }
        self.insert(value);
        let mut cut = false;
        while self.find_cut() {
            self.drop_oldest();
            cut = true;
        }
        if cut {
            self.detections += 1;
        }
        Ok(cut)
    }

    fn insert(&mut self, value: f64) {
        if self.rows.is_empty() {
            self.rows.push(VecDeque::new());
        }
        self.rows[0].push_back(value);
        self.total += value;
        self.width += 1;
        let mut level = 0;
        while self.rows[level].len() > MAX_BUCKETS_PER_ROW {
            let a = self.rows[level].pop_front().unwrap();
            let b = self.rows[level].pop_front().unwrap();
            if self.rows.len() == level + 1 {
                self.rows.push(VecDeque::new());
            }
            self.rows[level + 1].push_back(a + b);
            level += 1;
        }
    }

    fn drop_oldest(&mut self) {
        while let Some(row) = self.rows.last() {
            if row.is_empty() {
                self.rows.pop();
            } else {
                break;
            }
        }
        let level = self.rows.len() - 1;
        let sum = self.rows[level].pop_front().unwrap();
        self.total -= sum;
        self.width -= 1 << level;
        while matches!(self.rows.last(), Some(r) if r.is_empty()) {
            self.rows.pop();
        }
    }

    fn find_cut(&self) -> bool {
        if self.width < 2 * MIN_SUBWINDOW {
            return false;
        }
        let n = self.width as f64;
        let log_term = (4.0 * n / self.delta).ln();
        let mut n0 = 0u64;
        let mut s0 = 0.0;
        for (level, row) in self.rows.iter().enumerate().rev() {
            for &sum in row {
                n0 += 1 << level;
                s0 += sum;
                let n1 = self.width - n0;
                if n1 < MIN_SUBWINDOW {
                    return false;
                }
                if n0 < MIN_SUBWINDOW {
                    continue;
                }
                let (a, b) = (n0 as f64, n1 as f64);
                let m = 1.0 / (1.0 / a + 1.0 / b);
                let eps = (log_term / (2.0 * m)).sqrt();
                let diff = s0 / a - (self.total - s0) / b;
                if diff.abs() >= eps {
                    return true;
                }
            }
        }
        false
    }
}

/// Confidence radius `sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> Result<f64> {
    if !(range > 0.0) || !(delta > 0.0 && delta <= 1.0) || !(n >= 1.0) {
        return Err(Error::invalid(format!(
            "hoeffding bound needs R > 0, delta in (0, 1], n >= 1 (got R={range}, delta={delta}, n={n})"
        )));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n)).sqrt())
}
