//! Ranking metrics for a chunk of scored instances.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    AucRoc,
    AucPr,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AucRoc => "AUCROC",
            Metric::AucPr => "AUCPR",
        }
    }

    /// `None` when the metric is undefined for the chunk.
    pub fn compute(self, scores: &[f64], labels: &[bool]) -> Option<f64> {
        match self {
            Metric::AucRoc => auc_roc(scores, labels),
            Metric::AucPr => auc_pr(scores, labels),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aucroc" | "auc_roc" | "roc" => Ok(Metric::AucRoc),
            "aucpr" | "auc_pr" | "pr" | "average_precision" => Ok(Metric::AucPr),
            _ => Err(Error::config(format!("unknown metric `{s}`"))),
        }
    }
}

fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Computed from average ranks (Mann-Whitney U).
/// `None` unless both classes are present.
///
/// # Panics
/// If `scores` and `labels` differ in length.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(
        scores.len(),
        labels.len(),
        "scores and labels differ in length"
    );
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum keeps tie averages integral
    let mut rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let twice_avg = (i + 1 + j) as u64;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k]).count() as u64;
        rank_sum2 += twice_avg * pos_in_group;
        i = j;
    }
    let (p, n) = (n_pos as u64, n_neg as u64);
    let u2 = rank_sum2 - p * (p + 1);
    Some(u2 as f64 / (2 * p * n) as f64)
}

/// Average precision over the descending-score ranking. A group of tied
/// scores is one threshold: every positive in it gets the precision at the
/// end of the group. `None` when there are no positives.
///
/// # Panics
/// If `scores` and `labels` differ in length.
pub fn auc_pr(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(
        scores.len(),
        labels.len(),
        "scores and labels differ in length"
    );
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 {
        return None;
    }
    let order = descending(scores);
    let mut tp = 0usize;
    let mut sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group_pos = order[i..j].iter().filter(|&&k| labels[k]).count();
        tp += group_pos;
        sum += group_pos as f64 * tp as f64 / j as f64;
        i = j;
    }
    Some(sum / n_pos as f64)
}
