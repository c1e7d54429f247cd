//! The `run`, `sweep`, `tune` and `report` subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dlstream::experiment::{run_experiment, tune, ExperimentSpec};
use dlstream::harness::{aggregate_results, mean_std, ResultCell, TableRow};
use rayon::prelude::*;

use crate::config::Config;
use crate::output::{
    find_summaries, read_summary, write_chunks, write_delay_impact, write_summary, write_table,
    write_trials, SummaryRow,
};

/// Tunes first when the config asks for trials, then runs.
fn execute(cfg: &Config, out: &Path) -> Result<SummaryRow> {
    let mut spec = cfg.experiment()?;
    if cfg.trials > 0 {
        let (result, tuned) = tune(&spec, cfg.trials)?;
        write_trials(&out.join("tuning.csv"), &result.trials)?;
        spec.learner = tuned;
    }
    let res = run_experiment(&spec)?;
    write_chunks(&out.join("chunks.csv"), &res.run.reports)?;
    Ok(SummaryRow {
        model: res.model,
        dataset: res.dataset,
        delay_factor: res.delay_factor,
        mean: res.mean,
        std: res.std,
        runtime_s: res.runtime_s,
    })
}

pub fn run(cfg: &Config, out: &Path) -> Result<SummaryRow> {
    let row = execute(cfg, out)?;
    write_summary(&out.join("summary.csv"), std::slice::from_ref(&row))?;
    Ok(row)
}

fn run_dir(out: &Path, spec: &ExperimentSpec, cfg: &Config) -> PathBuf {
    out.join("runs")
        .join(&spec.stream.name)
        .join(spec.learner.name())
        .join(format!("alpha_{}", cfg.alpha))
        .join(format!("seed_{}", cfg.seed))
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SummaryRow>,
    /// (run index, error message)
    pub failures: Vec<(usize, String)>,
}

/// Runs every expanded config on `jobs` threads. Failed runs are reported
/// and skipped; merged files only depend on the configs.
pub fn sweep(configs: &[Config], jobs: usize, out: &Path) -> Result<SweepOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let results: Vec<Result<SummaryRow>> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                let spec = cfg.experiment()?;
                execute(cfg, &run_dir(out, &spec, cfg))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((i, format!("{e:#}"))),
        }
    }
    write_summary(&out.join("summary.csv"), &rows)?;
    write_delay_impact(&out.join("delay_impact.csv"), &rows)?;
    if !failures.is_empty() {
        let mut w = csv::Writer::from_path(out.join("failures.csv"))?;
        w.write_record(["run", "preset", "model", "delay_factor", "seed", "error"])?;
        for (i, msg) in &failures {
            let c = &configs[*i];
            w.write_record([
                i.to_string(),
                c.preset.clone().unwrap_or_default(),
                c.model.clone(),
                c.alpha.to_string(),
                c.seed.to_string(),
                msg.clone(),
            ])?;
        }
        w.flush()?;
    }
    Ok(SweepOutcome { rows, failures })
}

pub fn tune_only(cfg: &Config, trials: usize, out: &Path) -> Result<dlstream::harness::TuneResult> {
    let spec = cfg.experiment()?;
    let (result, _) = tune(&spec, trials)?;
    write_trials(&out.join("tuning.csv"), &result.trials)?;
    Ok(result)
}

/// Combines summary rows into one cell per (model, dataset). Several rows
/// for the same pair, e.g. seeds, are averaged.
pub fn cells(rows: &[SummaryRow], delay_factor: Option<f64>) -> Vec<ResultCell> {
    let mut sorted: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.mean.is_some() && delay_factor.is_none_or(|d| d == r.delay_factor))
        .collect();
    sorted.sort_by(|a, b| (&a.model, &a.dataset).cmp(&(&b.model, &b.dataset)));
    let mut out: Vec<ResultCell> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len()
            && sorted[j].model == sorted[i].model
            && sorted[j].dataset == sorted[i].dataset
        {
            j += 1;
        }
        let group = &sorted[i..j];
        let (mean, _) = mean_std(group.iter().map(|r| r.mean));
        let stds: Vec<f64> = group.iter().filter_map(|r| r.std).collect();
        out.push(ResultCell {
            model: group[0].model.clone(),
            dataset: group[0].dataset.clone(),
            mean: mean.unwrap(),
            std: (!stds.is_empty()).then(|| stds.iter().sum::<f64>() / stds.len() as f64),
        });
        i = j;
    }
    out
}

pub fn report(dirs: &[PathBuf], delay_factor: Option<f64>, out: &Path) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for d in dirs {
        for path in find_summaries(d)? {
            rows.extend(read_summary(&path)?);
        }
    }
    if rows.is_empty() {
        bail!(
            "no summary.csv rows found under {}",
            dirs.iter()
                .map(|d| d.display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    let cells = cells(&rows, delay_factor);
    if cells.is_empty() {
        bail!("no defined results to report");
    }
    let table = aggregate_results(&cells).context("aggregating results")?;
    write_table(&out.join("table.csv"), &table)?;
    Ok(table)
}
