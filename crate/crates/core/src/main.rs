use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use tabal::harness::{
    learning_curves, run_experiment, significance_csv, significance_report, summarize,
    ExperimentConfig, Metric, ResultStore,
};

#[derive(Parser)]
#[command(name = "tabal", version, about = "Pool-based active learning benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) every run of an experiment grid.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; overrides the config.
        #[arg(long)]
        jobs: Option<usize>,
        /// Result store directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-strategy mean, std and count of a metric, as CSV.
    Summarize {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "aulc")]
        metric: Metric,
    },
    /// Paired Wilcoxon tests of strategy A vs B with BH correction, as CSV.
    Significance {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "aulc")]
        metric: Metric,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Mean learning curves with 95% intervals, as CSV.
    Curves {
        #[arg(long)]
        store: PathBuf,
    },
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, jobs, out } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(jobs) = jobs {
                cfg.jobs = jobs;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let report = run_experiment(&cfg)?;
            eprintln!(
                "{} completed, {} skipped, {} failed",
                report.completed,
                report.skipped,
                report.failed.len()
            );
            for (key, msg) in &report.failed {
                eprintln!("failed: {}: {msg}", key.file_name());
            }
            if !report.success() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Summarize { store, metric } => {
            print!("{}", summarize(&ResultStore::open(store)?, metric)?);
        }
        Command::Significance { store, a, b, metric, alpha } => {
            let rows = significance_report(&ResultStore::open(store)?, &a, &b, metric, alpha)?;
            print!("{}", significance_csv(&rows));
        }
        Command::Curves { store } => {
            print!("{}", learning_curves(&ResultStore::open(store)?)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
