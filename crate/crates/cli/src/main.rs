use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod failure;
mod output;

use failure::Failure;

/// Interaction dynamics on Riemannian manifolds: simulations, the SO(3)
/// consensus reproduction, geometric property checks and rate fits.
#[derive(Debug, Parser)]
#[command(name = "geoconsensus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Overrides the configured or built-in seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for velocity evaluation (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Also write SVG diameter plots.
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a configured experiment and write CSV, JSONL and a JSON report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Consensus on SO(3) for β = 2, 3, 4, 8 with fitted decay slopes.
    #[command(name = "reproduce-figure1")]
    ReproduceFigure1 {
        /// Restrict to these exponents (comma separated).
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
    },
    /// Randomized geometric property suites over all backends.
    #[command(name = "verify-geometry")]
    VerifyGeometry {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Run the suites against a sphere with a deliberately wrong log map.
        #[arg(long, hide = true)]
        corrupt_log: bool,
    },
    /// Convergence to the dead zone of a truncated power law.
    #[command(name = "weak-demo")]
    WeakDemo {
        /// Experiment config with a truncated_power_law potential; the
        /// built-in planar demo when absent.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fit the decay of the diameter column of a diagnostics CSV.
    #[command(name = "fit-rate")]
    FitRate {
        csv: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Trailing fraction of the time span to fit.
        #[arg(long, default_value_t = geoconsensus::analysis::DEFAULT_WINDOW_FRACTION)]
        window: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Exponential,
    Power,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.global.workers {
        if n == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {n} workers: {e}")))?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Simulate { config } => commands::simulate(&config, g),
        Command::ReproduceFigure1 { beta } => commands::reproduce_figure1(&beta, g),
        Command::VerifyGeometry { samples, corrupt_log } => commands::verify_geometry(samples, corrupt_log, g),
        Command::WeakDemo { config } => commands::weak_demo(config.as_deref(), g),
        Command::FitRate { csv, model, window } => {
            let model = match model {
                ModelArg::Exponential => geoconsensus::analysis::RateModel::Exponential,
                ModelArg::Power => geoconsensus::analysis::RateModel::Power,
            };
            commands::fit_rate(&csv, model, window, g)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
