//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ladpm::cli::{self, TheoryCheckConfig};
use ladpm::config::ExperimentConfig;
use ladpm::error::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ladpm",
    version,
    about = "Lookahead diffusion sampling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count; affects speed only, never results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples and write samples.csv / samples.bin / report.json.
    Sample(Common),
    /// Rerun across extrapolation strengths and write sweep.csv.
    SweepLambda {
        #[command(flatten)]
        common: Common,
        /// Comma-separated strength values.
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
    },
    /// Fit the log-log error slope over step counts and write convergence.csv.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma-separated step counts.
        #[arg(long, value_delimiter = ',', required = true)]
        steps: Vec<usize>,
    },
    /// Check the closed-form strength theory on a parameter grid.
    ValidateTheory {
        #[arg(long, default_value_t = 10)]
        grid_points: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    set_threads(common.threads)?;
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.sampler.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    Ok((cfg, out))
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Sample(common) => {
            let (cfg, out) = load(&common)?;
            let report = cli::cmd_sample(&cfg, &out)?;
            println!("wrote {} (seed {})", out.display(), report.seed);
        }
        Command::SweepLambda { common, lambdas } => {
            let (cfg, out) = load(&common)?;
            cli::cmd_sweep_lambda(&cfg, &lambdas, &out)?;
            println!("wrote {}", out.join("sweep.csv").display());
        }
        Command::Convergence { common, steps } => {
            let (cfg, out) = load(&common)?;
            let report = cli::cmd_convergence(&cfg, &steps, &out)?;
            println!(
                "slope {}",
                report
                    .metrics
                    .get("slope")
                    .and_then(|v| v.as_f64())
                    .unwrap_or(f64::NAN)
            );
        }
        Command::ValidateTheory {
            grid_points,
            trials,
            seed,
            out,
            threads,
        } => {
            set_threads(threads)?;
            let check = TheoryCheckConfig {
                grid_points_per_axis: grid_points,
                trials,
                seed,
            };
            let report = cli::cmd_validate_theory(&check, &out)?;
            println!(
                "all checks passed (max residual {})",
                report
                    .metrics
                    .get("max_stationarity_residual")
                    .and_then(|v| v.as_f64())
                    .unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
