use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use rase_core::config::{describe, RunConfig, EXPERIMENTS};
use rase_core::runner::{self, RunReport};

/// Regenerate the RASE datasets as CSV tables with JSON sidecars.
#[derive(Parser, Debug)]
#[command(name = "rase-sim", version)]
struct Args {
    /// TOML configuration file
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Experiment to run (see --list)
    #[arg(short, long)]
    experiment: Option<String>,

    /// Output directory
    #[arg(short, long)]
    out: Option<PathBuf>,

    /// Integration time step
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,

    /// Optical depths to scan, comma separated
    #[arg(long = "alpha-l", value_delimiter = ',', allow_negative_numbers = true)]
    alpha_l: Option<Vec<f64>>,

    /// Worker threads (0: one per core)
    #[arg(short, long)]
    jobs: Option<usize>,

    /// List experiments and exit
    #[arg(long)]
    list: bool,

    /// Re-run the configuration stored in a .meta.json sidecar
    #[arg(long, conflicts_with = "config")]
    replay: Option<PathBuf>,
}

fn load(args: &Args) -> Result<RunConfig> {
    let mut cfg = match (&args.config, &args.replay) {
        (Some(path), _) => RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        (_, Some(meta)) => runner::config_from_meta(meta).with_context(|| format!("reading {}", meta.display()))?,
        _ => RunConfig::default(),
    };
    if let Some(e) = &args.experiment {
        cfg.experiment = e.clone();
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(a) = &args.alpha_l {
        cfg.alpha_l = Some(a.clone());
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(args: &Args) -> Result<RunReport> {
    let cfg = load(args)?;
    let report = runner::run(&cfg, |k, n| eprintln!("scan-point {k}/{n} done"))?;
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list {
        for e in EXPERIMENTS {
            println!("{e}\t{}", describe(e).unwrap_or_default());
        }
        return ExitCode::SUCCESS;
    }
    match execute(&args) {
        Ok(report) if report.is_clean() => ExitCode::SUCCESS,
        Ok(report) => {
            for f in &report.failures {
                eprintln!("error: scan point alpha_l = {} failed: {}", f.alpha_l, f.message);
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
