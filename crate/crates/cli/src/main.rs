//! `blindver`: run the protocols, sweep distances, verify identities and
//! print the analytic bounds.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 a bound or identity
//! check failed.

/// `println!` that tolerates a closed pipe, as in `blindver bounds | head`;
/// the result files are still written.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                eprintln!("cannot write to stdout: {e}");
            }
        }
    }};
}

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use blindver::pauli::SinglePauli;
use blindver::protocols::{AdversaryKind, ProtocolKind};
use clap::{Args, Parser, Subcommand};

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Assertion(String),
}

impl Failure {
    pub fn usage(msg: String) -> Self {
        Failure::Usage(msg)
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Assertion(_) => 2,
        }
    }
}

impl From<blindver::Error> for Failure {
    fn from(e: blindver::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "blindver", version, about = "Simulator for verifiable measurement-only blind quantum computing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the fooling probability of one protocol configuration.
    Run(RunArgs),
    /// Check identities against independent oracles.
    Verify(VerifyArgs),
    /// Estimate both protocols over a range of code distances.
    Sweep(SweepArgs),
    /// Print the analytic fooling bounds as CSV.
    Bounds(BoundsArgs),
}

/// Flags shared by `run` and `sweep`; each overrides the config file.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Defaults to $BLINDVER_OUTPUT_DIR, then `out`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Exit with status 2 if an upper confidence limit exceeds its bound.
    #[arg(long)]
    assert_bounds: bool,
}

#[derive(Args, Debug, Default)]
struct AdversaryArgs {
    /// honest, fixed, channel or targeted.
    #[arg(long)]
    adversary: Option<AdversaryKind>,
    /// Fixed attack, e.g. "X0 Z4" or "X.I.Z".
    #[arg(long)]
    pauli: Option<String>,
    #[arg(long)]
    px: Option<f64>,
    #[arg(long)]
    pz: Option<f64>,
    #[arg(long)]
    pxz: Option<f64>,
    /// Factor laid along a targeted chain: X, Z or XZ.
    #[arg(long)]
    factor: Option<SinglePauli>,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    adversary: AdversaryArgs,
    /// trap or topo.
    #[arg(long)]
    protocol: Option<ProtocolKind>,
    /// Register size.
    #[arg(long)]
    n: Option<usize>,
    /// Code distance of the canonical lattice; 1 means bare qubits.
    #[arg(long)]
    d: Option<usize>,
    /// Re-run this many trials at state level and compare.
    #[arg(long)]
    crosscheck: Option<u64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// twirl, kraus, trapprob, lattice, crosscheck or all.
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    adversary: AdversaryArgs,
    /// Distances such as "3,6,9" or "1-8".
    #[arg(long)]
    d: Option<String>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Distances such as "3,6,9" or "1-8".
    #[arg(long, default_value = "1-12")]
    d: String,
    /// Also write bounds.csv and a manifest here.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Verify(args) => commands::verify(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Bounds(args) => commands::bounds(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Assertion(m) => eprintln!("check failed: {m}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
