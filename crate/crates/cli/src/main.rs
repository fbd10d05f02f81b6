mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::CliError;

/// Friedman's rank test with certified chi-square approximation error, plus the exact and
/// Monte Carlo checks behind the bounds.
#[derive(Parser, Debug)]
#[command(name = "friedman", version)]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for enumeration and sampling; results do not depend on it.
    #[arg(long, global = true, env = "FRIEDMAN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the test on a CSV file (rows are trials, columns are treatments).
    Test(TestArgs),
    /// Evaluate every error bound for given n, r and test-function norms.
    Bounds(BoundsArgs),
    /// Run verification suites; one JSON line (or text line) per check.
    Verify(VerifyArgs),
    /// Distance between the law of F_r and chi-square(r-1).
    Distance(DistanceArgs),
    /// Gap and bounds over a list of n for one test function.
    Rate(RateArgs),
}

#[derive(Args, Debug)]
struct TestArgs {
    path: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Scores)]
    format: Format,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Scores,
    Ranks,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    /// Sup-norm of h'; "inf" for unbounded.
    #[arg(long, default_value_t = 1.0)]
    h1: f64,
    #[arg(long, default_value_t = 1.0)]
    h2: f64,
    #[arg(long, default_value_t = 1.0)]
    h3: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemmas,
    Coupling,
    Stein,
    Identities,
    All,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 6)]
    r_max: usize,
    #[arg(long, default_value_t = 3)]
    n_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    Kolmogorov,
    Wasserstein,
    Cos,
    Sin,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Exact enumeration if within budget, Monte Carlo otherwise.
    Auto,
    Exact,
    Mc,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    #[arg(long)]
    r: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Metric::Kolmogorov)]
    metric: Metric,
    /// Frequency for the cos/sin metrics.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    mode: Mode,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RateFunction {
    X,
    X2,
    Cos,
    Sin,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[arg(long)]
    r: usize,
    /// Comma-separated list of n.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_enum)]
    h: RateFunction,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    mode: Mode,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Exit quietly when stdout is closed early, as in `friedman verify ... | head`.
fn restore_sigpipe() {
    #[cfg(unix)]
    // SAFETY: called once at startup before any threads exist; resets a signal disposition.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn main() -> ExitCode {
    restore_sigpipe();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Test(args) => commands::test(&args.path, args.format, cli.json),
        Command::Bounds(args) => commands::bounds(&args, cli.json),
        Command::Verify(args) => commands::verify(&args, cli.json),
        Command::Distance(args) => commands::distance(&args, cli.json),
        Command::Rate(args) => commands::rate(&args, cli.json),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Input(_) => 3,
            })
        }
    }
}
