//! Summary statistics over chunk metrics and the model comparison table.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Mean and sample standard deviation of the defined values. The mean is
/// `None` without values, the deviation needs at least two.
pub fn mean_std(values: impl IntoIterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.len() > 1)
        .then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

/// Average-over-chunks result of one model on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultCell {
    pub model: String,
    pub dataset: String,
    pub mean: f64,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub model: String,
    pub dataset: String,
    pub mean: f64,
    pub std: Option<f64>,
    /// Mean of the model's per-dataset means.
    pub avg: f64,
    /// Mean over datasets of `100 * mean / best mean on that dataset`.
    pub n_avg: f64,
    /// Mean over datasets of the model's rank (1 = best, ties averaged).
    pub avg_rank: f64,
}

/// Ranks (1 = highest) with tied values sharing the average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Rows sorted by (model, dataset), model-level columns repeated per row.
pub fn aggregate_results(cells: &[ResultCell]) -> Result<Vec<TableRow>> {
    let mut seen = BTreeSet::new();
    for c in cells {
        if !seen.insert((c.model.as_str(), c.dataset.as_str())) {
            return Err(Error::invalid(format!(
                "duplicate result for model `{}` on dataset `{}`",
                c.model, c.dataset
            )));
        }
    }
    let mut by_dataset: BTreeMap<&str, Vec<&ResultCell>> = BTreeMap::new();
    for c in cells {
        by_dataset.entry(c.dataset.as_str()).or_default().push(c);
    }
    // model -> (sum of means, sum of normalised means, sum of ranks, datasets)
    let mut acc: BTreeMap<&str, (f64, f64, f64, usize)> = BTreeMap::new();
    for group in by_dataset.values() {
        let means: Vec<f64> = group.iter().map(|c| c.mean).collect();
        let best = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ranks = average_ranks(&means);
        for (c, r) in group.iter().zip(ranks) {
            let norm = if best > 0.0 {
                100.0 * c.mean / best
            } else {
                100.0
            };
            let e = acc.entry(c.model.as_str()).or_insert((0.0, 0.0, 0.0, 0));
            e.0 += c.mean;
            e.1 += norm;
            e.2 += r;
            e.3 += 1;
        }
    }
    let mut rows: Vec<TableRow> = cells
        .iter()
        .map(|c| {
            let (m, n, r, k) = acc[c.model.as_str()];
            let k = k as f64;
            TableRow {
                model: c.model.clone(),
                dataset: c.dataset.clone(),
                mean: c.mean,
                std: c.std,
                avg: m / k,
                n_avg: n / k,
                avg_rank: r / k,
            }
        })
        .collect();
    rows.sort_by(|a, b| (&a.model, &a.dataset).cmp(&(&b.model, &b.dataset)));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(model: &str, dataset: &str, mean: f64) -> ResultCell {
        ResultCell {
            model: model.into(),
            dataset: dataset.into(),
            mean,
            std: None,
        }
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std([Some(1.0), None, Some(3.0)]);
        assert_eq!(m, Some(2.0));
        assert!((s.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_std([Some(0.5)]), (Some(0.5), None));
        assert_eq!(mean_std([None]), (None, None));
    }

    #[test]
    fn single_model() {
        let rows = aggregate_results(&[cell("ht", "sea", 0.8)]).unwrap();
        assert_eq!(rows[0].n_avg, 100.0);
        assert_eq!(rows[0].avg_rank, 1.0);
        assert_eq!(rows[0].avg, 0.8);
    }

    #[test]
    fn normalised_average() {
        let rows = aggregate_results(&[cell("a", "d", 90.0), cell("b", "d", 45.0)]).unwrap();
        assert_eq!(rows[0].n_avg, 100.0);
        assert_eq!(rows[1].n_avg, 50.0);
        assert_eq!((rows[0].avg_rank, rows[1].avg_rank), (1.0, 2.0));
    }

    #[test]
    fn ties_share_average_rank() {
        let rows = aggregate_results(&[
            cell("a", "d", 0.7),
            cell("b", "d", 0.7),
            cell("c", "d", 0.7),
        ])
        .unwrap();
        assert!(rows.iter().all(|r| r.avg_rank == 2.0));
        assert_eq!(average_ranks(&[0.9, 0.5, 0.9, 0.1]), [1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn multi_dataset_averages() {
        let rows = aggregate_results(&[
            cell("a", "d1", 0.9),
            cell("b", "d1", 0.6),
            cell("a", "d2", 0.5),
            cell("b", "d2", 1.0),
        ])
        .unwrap();
        let a = &rows[0];
        assert_eq!(a.avg, 0.7);
        assert_eq!(a.avg_rank, 1.5);
        assert!((a.n_avg - 75.0).abs() < 1e-12);
        assert!(aggregate_results(&[cell("a", "d", 1.0), cell("a", "d", 0.5)]).is_err());
    }
}
