//! `cwalk`: reproducible command-line front end over the chaotic-walks
//! laboratory. Every run writes a manifest (config hash, seed, mode,
//! version) next to its outputs; reruns with identical manifests produce
//! bitwise-identical files regardless of `--threads`.
//!
//! Exit codes: 0 success, 1 numeric/validation failure, 2 usage error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArithmeticMode {
    Rational,
    Float,
}

impl ArithmeticMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArithmeticMode::Rational => "rational",
            ArithmeticMode::Float => "float",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cwalk",
    version,
    about = "Chaotic walks over expanding maps: simulation, symbolic coding, Poisson correctors and stopping-time experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment description (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: runs/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Arithmetic mode for solvers.
    #[arg(long, global = true, value_enum, default_value = "float")]
    mode: ArithmeticMode,

    /// Worker thread cap; results are independent of it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time series of the fiber coordinate (interval and line charts).
    Simulate,
    /// Symbolic itinerary of a point under the expanding map.
    Encode,
    /// Solve the Poisson equation; write the corrector and bound report.
    Poisson,
    /// Escape-time experiment (compact interval, half line, or stay).
    Escape,
    /// Drift-scaling sweep over an α-list plus a zero-drift ladder.
    Scaling,
    /// Birkhoff occupation fractions and episode statistics.
    Birkhoff,
    /// Class-membership validation report.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Encode => "encode",
            Command::Poisson => "poisson",
            Command::Escape => "escape",
            Command::Scaling => "scaling",
            Command::Birkhoff => "birkhoff",
            Command::Validate => "validate",
        }
    }
}

/// Failure with its process exit code.
pub enum Failure {
    /// Bad invocation or malformed config: exit 2.
    Usage(String),
    /// Numeric or validation failure during the run: exit 1.
    Run(String),
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<chaotic_walks::Error> for Failure {
    fn from(e: chaotic_walks::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let run = || match run_command(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    };
    match threads {
        None => run(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build();
            match pool {
                Ok(pool) => pool.install(run),
                Err(e) => {
                    eprintln!("usage error: cannot build thread pool: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}

fn run_command(cli: &Cli) -> Result<(), Failure> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("--config PATH is required".into()))?;
    let raw = std::fs::read_to_string(config_path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", config_path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&raw).map_err(|e| Failure::usage(format!("bad JSON: {e}")))?;
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(cli.command.name()));
    let ctx = commands::RunContext {
        command: cli.command.name(),
        config: value,
        seed_override: cli.seed,
        mode: cli.mode,
        out_dir,
    };
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Encode => commands::encode(&ctx),
        Command::Poisson => commands::poisson(&ctx),
        Command::Escape => commands::escape(&ctx),
        Command::Scaling => commands::scaling(&ctx),
        Command::Birkhoff => commands::birkhoff(&ctx),
        Command::Validate => commands::validate(&ctx),
    }
}
