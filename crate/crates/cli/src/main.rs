//! `seqdisc`: reproducible experiments on sequential unambiguous
//! discrimination of symmetric state families.
//!
//! Subcommands: `verify-usd` (invariant grids), `chain` (Monte Carlo chain
//! runs), `capacity` (erasure-channel capacity), `eve` (intercept-resend
//! attack) and `figures` (figure datasets). Exit codes: 0 success,
//! 1 invariant failure, 2 usage error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "seqdisc", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the measurement invariant suites over parameter grids.
    VerifyUsd(VerifyUsdArgs),
    /// Simulate a sequential measurement chain.
    Chain(ChainArgs),
    /// Compute erasure-channel capacities.
    Capacity(CapacityArgs),
    /// Run the intercept-resend attack simulation.
    Eve(EveArgs),
    /// Emit figure datasets.
    Figures(FiguresArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Serialize)]
pub struct VerifyUsdArgs {
    /// Smallest family size in the grid.
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    /// Largest family size in the grid.
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    /// Overlap grid step; the grid is 0, step, 2*step, ... up to s-max.
    #[arg(long, default_value_t = 0.1)]
    s_step: f64,
    /// Largest overlap in the grid.
    #[arg(long, default_value_t = 0.9)]
    s_max: f64,
    /// Number of random two-class grid points.
    #[arg(long, default_value_t = 25)]
    twoset_points: usize,
    /// Deliberately include one detection constant above the positivity
    /// bound; the report must flag it and the exit code becomes 1.
    #[arg(long, default_value_t = false)]
    inject_violation: bool,
    /// Seed for the random two-class grid.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory to write canonical family and measurement fixture files
    /// for replay.
    #[arg(long)]
    #[serde(skip)]
    dump_fixtures: Option<PathBuf>,
    /// Report path (stdout when omitted).
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct ChainArgs {
    /// Family size (and qudit dimension).
    #[arg(long)]
    n: usize,
    /// Pairwise overlap of the prepared states.
    #[arg(long)]
    s: f64,
    /// Number of observers in the chain.
    #[arg(long, default_value_t = 2)]
    observers: usize,
    /// Custom post-measurement overlap ladder t(1),...,t(M) (the last entry
    /// must be 1); overrides --observers.
    #[arg(long, value_delimiter = ',')]
    overlaps: Option<Vec<f64>>,
    /// Input distribution weights, one per state (uniform when omitted).
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Data file path (stdout when omitted).
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct CapacityArgs {
    /// Input alphabet size.
    #[arg(long)]
    n: usize,
    /// Size of the first input class.
    #[arg(long)]
    m_split: usize,
    /// Erasure rate of the first class.
    #[arg(long)]
    q1: f64,
    /// Erasure rate of the second class.
    #[arg(long)]
    q2: f64,
    /// Recorded in the output metadata; the computation is deterministic.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Data file path (stdout when omitted).
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct EveArgs {
    /// Family size (and qudit dimension).
    #[arg(long)]
    n: usize,
    /// Pairwise overlap of the prepared states.
    #[arg(long)]
    s: f64,
    /// Number of observers in the chain.
    #[arg(long, default_value_t = 1)]
    observers: usize,
    /// Link the eavesdropper taps (0 = before the first observer).
    #[arg(long, default_value_t = 0)]
    link: usize,
    /// Run the eavesdropper-free control instead.
    #[arg(long, default_value_t = false)]
    no_eve: bool,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Data file path (stdout when omitted).
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct FiguresArgs {
    /// Which dataset to emit: fig1, fig2 or fig3.
    #[arg(long)]
    figure: String,
    /// Sweep density for fig2/fig3 (inclusive endpoints).
    #[arg(long, default_value_t = 51)]
    points: usize,
    /// Family size override for fig1/fig2.
    #[arg(long)]
    n: Option<usize>,
    /// Fixed first-class erasure rate for fig1/fig2.
    #[arg(long, default_value_t = 0.5)]
    q1: f64,
    /// q2 series for fig1.
    #[arg(long, value_delimiter = ',')]
    q2_values: Option<Vec<f64>>,
    /// M series for fig2.
    #[arg(long, value_delimiter = ',')]
    m_values: Option<Vec<usize>>,
    /// N series for fig3.
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// Recorded in the output metadata; the computation is deterministic.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Data file path (stdout when omitted).
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

/// 1 means an invariant failed; other errors map to usage exit code 2.
pub enum CliError {
    InvariantFailure(String),
    Usage(String),
}

impl From<seqdisc_core::Error> for CliError {
    fn from(e: seqdisc_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o failure: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifyUsd(args) => commands::verify_usd(&args),
        Command::Chain(args) => commands::chain(&args),
        Command::Capacity(args) => commands::capacity(&args),
        Command::Eve(args) => commands::eve(&args),
        Command::Figures(args) => commands::figures(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::InvariantFailure(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
