//! CSV result files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dlstream::harness::{ChunkReport, TableRow, Trial};

pub const CHUNKS_HEADER: [&str; 8] = [
    "chunk_id",
    "n",
    "positives",
    "metric_name",
    "metric_value",
    "predict_ms",
    "train_ms",
    "gc_ms",
];
pub const SUMMARY_HEADER: [&str; 6] = [
    "model",
    "dataset",
    "delay_factor",
    "mean",
    "std",
    "runtime_s",
];
pub const DELAY_IMPACT_HEADER: [&str; 5] = ["model", "dataset", "delay_factor", "mean", "runs"];
pub const TABLE_HEADER: [&str; 7] = [
    "model", "dataset", "mean", "std", "Avg", "N_Avg", "Avg_Rank",
];

/// Shortest text that parses back to the same value; `NA` when undefined.
pub fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn parse_num(s: &str) -> Result<Option<f64>> {
    if s == "NA" {
        return Ok(None);
    }
    Ok(Some(
        s.parse().with_context(|| format!("bad number `{s}`"))?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub dataset: String,
    pub delay_factor: f64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub runtime_s: f64,
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

pub fn write_chunks(path: &Path, reports: &[ChunkReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(CHUNKS_HEADER)?;
    for r in reports {
        w.write_record([
            r.chunk_id.to_string(),
            r.n.to_string(),
            r.positives.to_string(),
            r.metric.as_str().to_string(),
            num(r.value),
            r.predict_ms.to_string(),
            r.train_ms.to_string(),
            r.gc_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.dataset.clone(),
            r.delay_factor.to_string(),
            num(r.mean),
            num(r.std),
            r.runtime_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    if r.headers()?.iter().ne(SUMMARY_HEADER) {
        bail!("{}: unexpected header", path.display());
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("{}: row {}", path.display(), i + 1);
        rows.push(SummaryRow {
            model: rec[0].to_string(),
            dataset: rec[1].to_string(),
            delay_factor: rec[2].parse().with_context(ctx)?,
            mean: parse_num(&rec[3]).with_context(ctx)?,
            std: parse_num(&rec[4]).with_context(ctx)?,
            runtime_s: rec[5].parse().with_context(ctx)?,
        });
    }
    Ok(rows)
}

/// Mean over runs per (model, dataset, delay_factor), sorted by
/// (dataset, model, delay_factor). Runs with an undefined mean are skipped.
pub fn delay_impact(rows: &[SummaryRow]) -> Vec<(String, String, f64, f64, usize)> {
    let mut keyed: Vec<&SummaryRow> = rows.iter().filter(|r| r.mean.is_some()).collect();
    keyed.sort_by(|a, b| {
        (&a.dataset, &a.model)
            .cmp(&(&b.dataset, &b.model))
            .then(a.delay_factor.total_cmp(&b.delay_factor))
    });
    let mut out: Vec<(String, String, f64, f64, usize)> = Vec::new();
    for r in keyed {
        match out.last_mut() {
            Some(last) if last.0 == r.model && last.1 == r.dataset && last.2 == r.delay_factor => {
                last.3 += r.mean.unwrap();
                last.4 += 1;
            }
            _ => out.push((
                r.model.clone(),
                r.dataset.clone(),
                r.delay_factor,
                r.mean.unwrap(),
                1,
            )),
        }
    }
    for row in &mut out {
        row.3 /= row.4 as f64;
    }
    out
}

pub fn write_delay_impact(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(DELAY_IMPACT_HEADER)?;
    for (model, dataset, factor, mean, runs) in delay_impact(rows) {
        w.write_record([
            model,
            dataset,
            factor.to_string(),
            mean.to_string(),
            runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table(path: &Path, rows: &[TableRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.dataset.clone(),
            r.mean.to_string(),
            num(r.std),
            r.avg.to_string(),
            r.n_avg.to_string(),
            r.avg_rank.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials(path: &Path, trials: &[Trial]) -> Result<()> {
    let mut w = writer(path)?;
    let names: Vec<String> = trials
        .first()
        .map(|t| t.params.keys().cloned().collect())
        .unwrap_or_default();
    let mut header = vec!["trial".to_string(), "score".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (i, t) in trials.iter().enumerate() {
        let mut rec = vec![i.to_string(), num(t.score)];
        rec.extend(names.iter().map(|n| t.params[n].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Every `summary.csv` below `root`, in path order.
pub fn find_summaries(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))?;
        for e in entries {
            let path = e?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "summary.csv") {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}
