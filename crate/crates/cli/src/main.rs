//! `tradevol` — seeded simulations of a broker pricing trades between two
//! counterparties, plus horizon sweeps, built-in validation suites, and the
//! discrete search game.
//!
//! Exit codes: 0 on success, 1 when a run or assertion fails, 2 on bad
//! usage or configuration (clap reports its own parse errors as 2).

mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tradevol_core::brokers::PsiVariant;
use tradevol_core::dist::DistError;
use tradevol_core::eval::{EvalError, RegretMode};
use tradevol_core::game::GameError;
use tradevol_core::protocol::FeedbackKind;
use tradevol_core::{Algo, BrokerError};

/// CLI-level failure, split by exit code: configuration mistakes exit 2,
/// runtime failures (I/O, assertion violations) exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(_) | EvalError::Dist(_) | EvalError::Fit(_) => {
                CliError::Config(e.to_string())
            }
            EvalError::Broker(b) => b.into(),
            EvalError::EnvelopeExceeded { .. } | EvalError::Csv(_) | EvalError::Io(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

impl From<BrokerError> for CliError {
    fn from(e: BrokerError) -> Self {
        match e {
            BrokerError::Parameter(_) | BrokerError::WrongFeedback { .. } => {
                CliError::Config(e.to_string())
            }
            BrokerError::State(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::Parameter(_) => CliError::Config(e.to_string()),
            GameError::Broker(b) => b.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "tradevol", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one (algorithm, distribution, horizon) cell with replications.
    Run(RunArgs),
    /// Run a JSON experiment file over a list of horizons.
    Sweep(SweepArgs),
    /// Run a built-in closed-form or statistical validation suite.
    Validate(ValidateArgs),
    /// Play a pricing strategy against the segment-halving search adversary.
    Game(GameArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Fem,
    Mbs,
    Fepsi,
    #[value(name = "grid_ucb")]
    GridUcb,
    Fixed,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Fem => Algo::Fem,
            AlgoArg::Mbs => Algo::Mbs,
            AlgoArg::Fepsi => Algo::Fepsi,
            AlgoArg::GridUcb => Algo::GridUcb,
            AlgoArg::Fixed => Algo::Fixed,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Surrogate,
    Exact,
}

impl From<VariantArg> for PsiVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Surrogate => PsiVariant::Surrogate,
            VariantArg::Exact => PsiVariant::Exact,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FeedbackArg {
    Full,
    #[value(name = "two_bit")]
    TwoBit,
}

impl From<FeedbackArg> for FeedbackKind {
    fn from(f: FeedbackArg) -> Self {
        match f {
            FeedbackArg::Full => FeedbackKind::Full,
            FeedbackArg::TwoBit => FeedbackKind::TwoBit,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RegretModeArg {
    Pseudo,
    Realized,
}

impl From<RegretModeArg> for RegretMode {
    fn from(m: RegretModeArg) -> Self {
        match m {
            RegretModeArg::Pseudo => RegretMode::Pseudo,
            RegretModeArg::Realized => RegretMode::Realized,
        }
    }
}

#[derive(Args)]
pub struct RunArgs {
    /// Pricing algorithm.
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    /// Valuation distribution, as `family` or `family:key=val,...`
    /// (e.g. `uniform`, `piecewise_linear_lb:eps=0.25`, `four_atom:eps=0.1`,
    /// `interval_uniform:n=3,k=2`).
    #[arg(long)]
    pub dist: String,
    /// Rounds per simulation.
    #[arg(long)]
    pub horizon: u64,
    /// Independent replications (seeds `seed`, `seed+1`, ...).
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the one-row summary CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the per-round trace CSV (every replication) here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Failure probability for the binary-search algorithm
    /// (default 2/T^3).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Grid size for the UCB baseline (default ceil(T^(2/3))).
    #[arg(long)]
    pub k: Option<u64>,
    /// Posted price for the fixed baseline.
    #[arg(long)]
    pub price: Option<f64>,
    /// Empirical objective used by the sample-maximizer algorithm.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Feedback granularity; defaults to what the algorithm needs.
    #[arg(long, value_enum)]
    pub feedback: Option<FeedbackArg>,
    #[arg(long, value_enum, default_value_t = RegretModeArg::Pseudo)]
    pub regret_mode: RegretModeArg,
}

#[derive(Args)]
pub struct SweepArgs {
    /// JSON experiment file; see the README for the schema.
    pub file: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    /// Expected reward equals 2F(1-F) (plus atom terms) and peaks at a median.
    Lemma1,
    /// Four-atom closed forms at prices 1/3 and 2/3.
    Psi,
    /// Empirical-objective concentration envelope 2*KS + 1/(2t).
    Dkw,
    /// Sampler-vs-cdf and sampler-vs-sampler KS distances.
    Sampler,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub check: CheckArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Bisect,
    Random,
    #[value(name = "mbs-wrapper")]
    MbsWrapper,
}

#[derive(Args)]
pub struct GameArgs {
    /// Depth n: the adversary starts with 2^n candidate instances.
    #[arg(long)]
    pub levels: u32,
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    /// How many seeded matches to play.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Round cap; defaults to n-1, the guaranteed-survival horizon.
    #[arg(long)]
    pub horizon: Option<u64>,
}

/// Honors an optional `THREADS` override for the worker-pool size.
fn configure_threads() -> Result<(), CliError> {
    let value = match std::env::var("THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError::Config(format!("THREADS: {e}"))),
    };
    let workers: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Config(format!("THREADS must be a positive integer, got {value:?}"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => commands::cmd_run(args),
        Command::Sweep(args) => commands::cmd_sweep(&args.file),
        Command::Validate(args) => commands::cmd_validate(args.check),
        Command::Game(args) => commands::cmd_game(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| dispatch(&cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
