mod commands;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinvar::analysis::ClaimId;
use spinvar::SpinQuantum;

/// Invariant spin uncertainty: verifications and sampled data.
#[derive(Parser, Debug)]
#[command(name = "spinvar", version)]
struct Cli {
    /// Worker threads (default: hardware count). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// All claims for one spin, with the inequality spot checks.
    Report(Common),
    /// A single claim.
    Verify {
        #[arg(long, value_parser = parse_claim)]
        claim: ClaimId,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo mean of Δ under the Fubini-Study measure.
    McMean(Common),
    /// Minimize Δ from random starts.
    Minimize(Common),
    /// Random states with Δ and ⟨J⟩ (CSV by default).
    Sample(Common),
    /// The mean/max ratio table up to `--j`.
    Table(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Spin as an integer or half-integer, e.g. "1/2", "3", "5/2".
    #[arg(long, value_parser = parse_spin, allow_hyphen_values = true)]
    j: Option<SpinQuantum>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample, start or fiducial count; each command has its own default.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: Option<u64>,
    /// Optimizer tolerance, relative to ħ²j.
    #[arg(long, default_value_t = spinvar::analysis::DEFAULT_OPT_TOL, value_parser = parse_positive)]
    tol: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    hbar: f64,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
    Text,
}

fn parse_spin(s: &str) -> Result<SpinQuantum, String> {
    s.parse::<SpinQuantum>().map_err(|e| e.to_string())
}

fn parse_claim(s: &str) -> Result<ClaimId, String> {
    s.parse::<ClaimId>().map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

/// Command outcome: rendered output plus whether every claim passed.
pub struct Outcome {
    pub body: String,
    pub pass: bool,
}

pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<spinvar::Error> for Failure {
    fn from(e: spinvar::Error) -> Self {
        use spinvar::Error::*;
        match e {
            InvalidSpin(_) | InvalidM { .. } | InvalidLabel { .. } | InvalidTau { .. } | OutOfRange(_)
            | InvalidParameter(_) | MethodUnavailable { .. } | Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let (common, result) = match &cli.command {
        Command::Report(c) => (c, commands::report(c)),
        Command::Verify { claim, common } => (common, commands::verify(*claim, common)),
        Command::McMean(c) => (c, commands::mc_mean(c)),
        Command::Minimize(c) => (c, commands::minimize(c)),
        Command::Sample(c) => (c, commands::sample(c)),
        Command::Table(c) => (c, commands::table(c)),
    };
    let outcome = result?;
    match &common.output {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(outcome.body.as_bytes()))
            .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
        None => io::stdout()
            .lock()
            .write_all(outcome.body.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
