use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use bleach_cli::{commands, RunConfig};
use clap::{Args, Parser, Subcommand};

/// Optimal radially symmetric bleach shapes for estimating a diffusion coefficient.
#[derive(Parser)]
#[command(name = "bleach", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by all commands. Flags override values from `--config`.
#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Kernel table file.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Directory receiving CSV, JSON and SVG outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    beta_min: Option<f64>,
    #[arg(long, global = true)]
    beta_max: Option<f64>,
    #[arg(long, global = true)]
    beta_step: Option<f64>,
    #[arg(long, global = true)]
    r_max: Option<f64>,
    #[arg(long, global = true)]
    r_step: Option<f64>,
    /// Largest number of jumps searched.
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative tolerance of the kernel march.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) the kernel table.
    Tabulate,
    /// Unconstrained optimum for every beta, with figure data.
    Optimize,
    /// Energy-constrained optimum over the beta x energy plane.
    Problem2 {
        #[arg(long)]
        energy_bins: Option<usize>,
    },
    /// Run the acceptance checks; exits nonzero if any fails.
    Validate {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<u8>>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Fit D to noisy synthetic data and compare with the predicted error.
    Estimate {
        /// Comma-separated jump radii.
        #[arg(long, value_delimiter = ',')]
        shape: Option<Vec<f64>>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let c = &cli.common;
    if let Some(path) = &c.config {
        cfg.apply_file(path)?;
    }
    if let Some(v) = &c.cache {
        cfg.cache = v.clone();
    }
    if let Some(v) = &c.out_dir {
        cfg.out_dir = v.clone();
    }
    macro_rules! take {
        ($($field:ident),*) => { $( if let Some(v) = c.$field { cfg.$field = v; } )* };
    }
    take!(beta_min, beta_max, beta_step, r_max, r_step, n_max, seed, tol);
    match &cli.command {
        Command::Problem2 { energy_bins } => {
            if let Some(v) = energy_bins {
                cfg.energy_bins = *v;
            }
        }
        Command::Validate { criteria, trials } => {
            if let Some(v) = criteria {
                cfg.criteria = v.clone();
            }
            if let Some(v) = trials {
                cfg.trials = *v;
            }
        }
        Command::Estimate { shape, beta, sigma, trials } => {
            if let Some(v) = shape {
                cfg.shape = v.clone();
            }
            if let Some(v) = beta {
                cfg.beta = *v;
            }
            if let Some(v) = sigma {
                cfg.sigma = *v;
            }
            if let Some(v) = trials {
                cfg.trials = *v;
            }
        }
        Command::Tabulate | Command::Optimize => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = resolve(&cli)?;
    match cli.command {
        Command::Tabulate => {
            let t = commands::tabulate(&cfg)?;
            let (nb, n, _) = t.shape();
            println!("table {} ({nb} x {n} x {n}) sha256 {}", cfg.cache.display(), t.meta.hash);
        }
        Command::Optimize => {
            let sweep = commands::optimize(&cfg)?;
            for t in &sweep.transitions {
                println!("transition {} -> {} at beta = {:.2} +- {:.2}", t.from_n, t.to_n, t.beta, t.uncertainty);
            }
            println!("wrote figure data to {}", cfg.out_dir.display());
        }
        Command::Problem2 { .. } => {
            let map = commands::problem2(&cfg)?;
            let (fours, total) = map.count(4);
            println!("{fours} of {total} non-empty cells choose N* = 4");
        }
        Command::Validate { .. } => {
            let report = commands::validate(&cfg)?;
            for c in &report.checks {
                println!("{}", c.line());
            }
            println!("report written to {}", cfg.out_dir.join("validation.json").display());
            return Ok(report.passed());
        }
        Command::Estimate { .. } => {
            let r = commands::estimate(&cfg)?;
            println!(
                "predicted {:.4e}, empirical {:.4e} +- {:.1e} (ratio {:.3}), {} failed fits",
                r.predicted,
                r.empirical,
                r.standard_error,
                r.ratio(),
                r.failures
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
