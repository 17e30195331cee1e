//! Batch frontend: parses a flat key = value config, seeds one
//! deterministic random stream, dispatches to an experiment module, and
//! emits CSV or JSON artifacts. Identical (command, config, seed)
//! invocations produce byte-identical artifacts; the run summary with
//! wall time goes to stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit codes: 1 usage, 2 config, 3 numeric, 4 invariant.
pub enum CliError {
    Usage(String),
    Run(entrodyn::Error),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Run(e) => match e {
                entrodyn::Error::Parse { .. }
                | entrodyn::Error::Validation(_)
                | entrodyn::Error::Dimension(_) => 2,
                entrodyn::Error::Integration(_) | entrodyn::Error::Singularity(_) => 3,
                entrodyn::Error::Sequencing(_) | entrodyn::Error::Invariant(_) => 4,
            },
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Run(e) => format!("error: {e}"),
            CliError::Io(e) => format!("error: {e}"),
        }
    }
}

impl From<entrodyn::Error> for CliError {
    fn from(e: entrodyn::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Path to the flat key = value config (for `ledger`: the script).
    #[arg(long)]
    pub config: PathBuf,
    /// Seed of the run's single pseudo-random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Artifact path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "entrodyn", version, about = "entropy-dynamics batch runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Five-stage measurement pipeline with entropy profile and Born sampling.
    Measure(RunArgs),
    /// Lindblad / von Neumann trajectory integration.
    Lindblad(RunArgs),
    /// Apparent-CPT-violation scan over (β, ε).
    Kaon(RunArgs),
    /// Baker-map mixing with optional coarse-graining.
    Mix(RunArgs),
    /// Scripted world-ledger run.
    Ledger(RunArgs),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Measure(args) => commands::measure::run(&args),
        Command::Lindblad(args) => commands::lindblad::run(&args),
        Command::Kaon(args) => commands::kaon::run(&args),
        Command::Mix(args) => commands::mix::run(&args),
        Command::Ledger(args) => commands::ledger::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version output with exit code 0
            if e.exit_code() == 0 {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
