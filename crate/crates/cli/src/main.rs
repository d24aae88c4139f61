//! `planarprob`: Temperley-Lieb arithmetic, planar map series and matrix
//! Monte Carlo from the command line.
//!
//! Exit codes: 0 success, 1 a numeric check failed, 2 usage or validation
//! error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "planarprob", version, about = "Planar algebra laws: exact series and matrix Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temperley-Lieb dimensions, Gram matrices and traces.
    #[command(subcommand)]
    Tl(TlCommand),
    /// Free Poisson moments Σ_{π ∈ NC(p)} δ^{|π|}.
    Moments(MomentsArgs),
    /// Planar-map series of a free Gibbs law.
    Series(SeriesArgs),
    /// O(n) loop model series in δ.
    Onmodel(OnModelArgs),
    /// Monte Carlo trace estimates.
    Rmt(RmtArgs),
    /// Pooled eigenvalue histogram of a self-adjoint expression.
    Spectrum(SpectrumArgs),
}

#[derive(Subcommand)]
enum TlCommand {
    /// Number of TL diagrams on 2k points.
    Dim {
        #[arg(long)]
        k: usize,
    },
    /// Gram matrix of the trace pairing at a numeric δ, with eigenvalues.
    Gram {
        #[arg(long)]
        k: usize,
        /// Numeric expression such as `2cos(pi/5)` or `sqrt(2)`.
        #[arg(long, allow_hyphen_values = true)]
        delta: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Voiculescu trace of an element, e.g. `cup^2 + 3:[(1,6),(2,3),(4,5)]`.
    Trace {
        #[arg(long)]
        element: String,
        /// Also evaluate at this δ.
        #[arg(long)]
        delta: Option<String>,
    },
}

#[derive(Args)]
struct MomentsArgs {
    /// Largest moment order.
    #[arg(long)]
    p: usize,
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Args)]
struct SeriesArgs {
    #[arg(long)]
    config: PathBuf,
    /// Also run the Wick oracle and report the difference in the N⁰ slot.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OnModelArgs {
    /// Observable, e.g. `cup`.
    #[arg(long, default_value = "cup")]
    observable: String,
    #[arg(long, default_value_t = 2)]
    order1: usize,
    #[arg(long, default_value_t = 2)]
    order2: usize,
    /// δ values at which to evaluate the coefficients.
    #[arg(long = "at")]
    at: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum RmtKind {
    Gaussian,
    Graph,
    Gibbs,
}

#[derive(Args)]
struct RmtArgs {
    kind: RmtKind,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Series JSON to compare the estimates against.
    #[arg(long)]
    check: Option<PathBuf>,
    /// Relative allowance added to 3·stderr in `--check`.
    #[arg(long, default_value_t = 0.0)]
    allowance: f64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    config: PathBuf,
    /// Self-adjoint expression, e.g. `X1 X1*` or `cup`.
    #[arg(long)]
    expr: String,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Histogram range `lo,hi`; defaults to the spectrum's extent.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Report the fraction of eigenvalues above this value.
    #[arg(long, allow_hyphen_values = true)]
    above: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tl(TlCommand::Dim { k }) => commands::tl_dim(k),
        Command::Tl(TlCommand::Gram { k, delta, out }) => commands::tl_gram(k, &delta, out.as_deref()),
        Command::Tl(TlCommand::Trace { element, delta }) => commands::tl_trace(&element, delta.as_deref()),
        Command::Moments(a) => commands::moments(a.p, a.delta.as_deref()),
        Command::Series(a) => commands::series(&a.config, a.oracle, a.out.as_deref()),
        Command::Onmodel(a) => commands::onmodel(&a.observable, a.order1, a.order2, &a.at, a.out.as_deref()),
        Command::Rmt(a) => commands::rmt(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
