//! `sunbound` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 singular information,
//! 3 optimizer did not converge.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "sunbound",
    version,
    about = "Intrinsic Cramér-Rao bounds for SU(n) channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bound report for a probe, optionally through a parametrized channel.
    Bound(BoundArgs),
    /// Sweep the particle number and compare GHZ probes with the floor.
    Scan(ScanArgs),
    /// Unpolarization and saturation diagnostics for a probe.
    Check(CheckArgs),
    /// Search for a probe minimizing the intrinsic bound.
    Optimize(OptimizeArgs),
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Probe description (JSON).
    #[arg(long)]
    pub probe: PathBuf,
    /// Channel parametrization (JSON); without it only the intrinsic bound is reported.
    #[arg(long)]
    pub param: Option<PathBuf>,
    /// Parameter point, comma-separated; defaults to all zeros.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    /// `intrinsic`, `identity`, or a path to a JSON weight matrix.
    #[arg(long, default_value = "intrinsic")]
    pub weight: String,
    /// Replace singular inverses by pseudo-inverses instead of failing.
    #[arg(long)]
    pub pseudo_inverse: bool,
    /// Largest Hilbert-space dimension to build.
    #[arg(long, default_value_t = sunbound::representation::DEFAULT_DIMENSION_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Number of modes.
    #[arg(long = "n")]
    pub n: usize,
    #[arg(long)]
    pub nmin: usize,
    #[arg(long)]
    pub nmax: usize,
    /// Comma-separated subset of ghz,floor,optimized.
    #[arg(long, default_value = "ghz,floor")]
    pub states: String,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG log-log plot destination.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Optimizer seed, required for the optimized series.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optimizer settings (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value_t = sunbound::representation::DEFAULT_DIMENSION_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Probe description (JSON).
    #[arg(long)]
    pub probe: PathBuf,
    #[arg(long, default_value_t = sunbound::representation::DEFAULT_DIMENSION_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Number of modes.
    #[arg(long = "n")]
    pub n: usize,
    /// Number of particles.
    #[arg(short = 'N', long = "particles")]
    pub particles: usize,
    #[arg(long)]
    pub seed: u64,
    /// Optimizer settings (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value_t = sunbound::representation::DEFAULT_DIMENSION_CAP)]
    pub cap: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(commands::EXIT_USAGE),
            };
        }
    };
    let outcome = match cli.command {
        Command::Bound(a) => commands::bound(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Check(a) => commands::check(&a),
        Command::Optimize(a) => commands::optimize(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => ExitCode::from(commands::report_error(&e)),
    }
}
