use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use dlstream_cli::commands;
use dlstream_cli::config::Config;
use dlstream_cli::output::num;

#[derive(Parser)]
#[command(
    name = "dlstream",
    version,
    about = "Delayed-label stream learning benchmark runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML, dotted keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark preset, overrides stream.preset.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed, overrides run.seed (and sweep.seeds).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "DLSTREAM_OUT", default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain, optionally tune, then evaluate one configuration.
    Run {
        #[command(flatten)]
        common: Common,
        /// Model name, overrides model.name.
        #[arg(long)]
        model: Option<String>,
        /// Delay factor, overrides delay.alpha.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run the grid of a config's [sweep] section in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Concurrent runs.
        #[arg(long, env = "DLSTREAM_JOBS")]
        jobs: Option<usize>,
    },
    /// Random search over the model's hyperparameters on the offline data.
    Tune {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Aggregate summary.csv files into table.csv.
    Report {
        /// Directories searched for summary.csv (default: the output directory).
        dirs: Vec<PathBuf>,
        #[arg(long, env = "DLSTREAM_OUT", default_value = "results")]
        out: PathBuf,
        /// Only use runs with this delay factor.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn load(common: &Common) -> Result<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(p) = &common.preset {
        cfg.preset = Some(p.clone());
        cfg.csv = None;
        if let Some(s) = &mut cfg.sweep {
            s.presets = vec![p.clone()];
        }
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
        if let Some(sw) = &mut cfg.sweep {
            sw.seeds = vec![s];
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            common,
            model,
            alpha,
        } => {
            let mut cfg = load(&common)?;
            if cfg.sweep.is_some() {
                bail!("sweep: section only allowed with the sweep command");
            }
            if let Some(m) = model {
                if m != cfg.model {
                    cfg.params.clear();
                }
                cfg.model = m;
            }
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            let row = commands::run(&cfg, &common.out)?;
            println!(
                "{} on {} (alpha {}): mean {} std {}",
                row.model,
                row.dataset,
                row.delay_factor,
                num(row.mean),
                num(row.std)
            );
        }
        Command::Sweep { common, jobs } => {
            let cfg = load(&common)?;
            let runs = cfg.expand();
            let jobs =
                jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let outcome = commands::sweep(&runs, jobs, &common.out)?;
            println!("{} of {} runs completed", outcome.rows.len(), runs.len());
            for (i, msg) in &outcome.failures {
                eprintln!("run {i} failed: {msg}");
            }
            if !outcome.failures.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Tune { common, trials } => {
            let cfg = load(&common)?;
            let result = commands::tune_only(&cfg, trials, &common.out)?;
            println!("best score {}", num(result.best_score));
            for (k, v) in &result.best {
                println!("{k} = {v}");
            }
        }
        Command::Report { dirs, out, alpha } => {
            let dirs = if dirs.is_empty() {
                vec![out.clone()]
            } else {
                dirs
            };
            let table = commands::report(&dirs, alpha, &out)?;
            println!(
                "{} rows written to {}",
                table.len(),
                out.join("table.csv").display()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
