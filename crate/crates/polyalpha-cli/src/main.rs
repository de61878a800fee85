//! Command-line driver for cipher transforms, model training, evaluation,
//! key-recovery attacks, activation traces, hidden-size sweeps, and
//! gradient verification.
//!
//! Stdout carries only cipher output and result summary lines; progress
//! and diagnostics go to stderr. Artifact-producing commands write into
//! `--out` alongside a `manifest.json` describing the run.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

const EXIT_HELP: &str = "Exit codes:\n  0  success\n  1  check failed (gradcheck)\n  2  configuration or usage error\n  3  runtime failure";

#[derive(Parser)]
#[command(
    name = "polyalpha",
    version,
    about = "Train and probe recurrent models that decrypt classical ciphers",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encrypt or decrypt text directly with one of the ciphers
    Cipher(CipherArgs),
    /// Train a model and write metrics, a checkpoint, and a manifest
    Train(TrainArgs),
    /// Evaluate a checkpoint, optionally under a fixed key or across lengths
    Eval(EvalArgs),
    /// Score a key-recovery model over fresh attack samples
    Attack(AttackArgs),
    /// Record memory-cell activations and norms over one sample
    Trace(TraceArgs),
    /// Train one model per hidden size and summarize steps-to-threshold
    Sweep(SweepArgs),
    /// Verify analytic gradients against central finite differences
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
#[command(group = ArgGroup::new("direction").required(true))]
struct CipherArgs {
    /// One of: vigenere, autokey, enigma
    #[arg(long)]
    cipher: String,
    /// Keyphrase A-Z (rotor start positions for enigma)
    #[arg(long)]
    key: String,
    #[arg(long, group = "direction")]
    encrypt: bool,
    #[arg(long, group = "direction")]
    decrypt: bool,
    /// Input text; lowercase letters are accepted and uppercased
    #[arg(long)]
    text: String,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON config file; omitted fields take defaults
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config field, e.g. --set lr=1e-3 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for --set seed=N
    #[arg(long, conflicts_with = "resume")]
    seed: Option<u64>,
    /// Output directory for metrics.csv, model.ckpt, manifest.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Continue from a checkpoint; --set may adjust schedule fields such
    /// as max_steps, but model-shape fields must match
    #[arg(long, value_name = "CKPT", conflicts_with = "config")]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "CKPT")]
    checkpoint: PathBuf,
    /// Evaluate under this fixed key instead of random seen keys
    #[arg(long)]
    key: Option<String>,
    /// Number of evaluation messages
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Override the evaluation seed (defaults to the training seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Also evaluate at these message lengths and write curve.csv,
    /// e.g. --lengths 14,28,56,112
    #[arg(long, value_name = "L1,L2,...", requires = "out")]
    lengths: Option<String>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, value_name = "CKPT")]
    checkpoint: PathBuf,
    /// Number of fresh attack samples to score
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Override the evaluation seed (defaults to the training seed)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, value_name = "CKPT")]
    checkpoint: PathBuf,
    /// Memory units to record, e.g. --units 3,17; all units when omitted
    #[arg(long, value_name = "U1,U2,...")]
    units: Option<String>,
    /// Fix the sample's key instead of drawing one
    #[arg(long)]
    key: Option<String>,
    /// Message length of the traced sample (defaults to training length)
    #[arg(long)]
    length: Option<usize>,
    /// Which sample of the evaluation stream to trace
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// Override the sample seed (defaults to the training seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for trace.csv, memory_norm.csv, manifest.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file shared by every size; omitted fields take defaults
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config field (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for --set seed=N
    #[arg(long)]
    seed: Option<u64>,
    /// Hidden sizes to train, e.g. --sizes 32,64,128,256,512
    #[arg(long, value_name = "N1,N2,...")]
    sizes: String,
    /// Output directory for per-size CSVs, summary.csv, manifest.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Hidden size of the checked instances
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Sequence length
    #[arg(long = "T", default_value_t = 5)]
    steps: usize,
    /// Input width (27 for decryption, 54 for attack inputs)
    #[arg(long, default_value_t = 27)]
    d: usize,
    /// Number of random instances
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Negative control: corrupt one analytic gradient entry by this
    /// amount; any nonzero value must make the check fail
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
}

/// Errors mapped to exit codes: config/usage mistakes exit 2, runtime
/// failures exit 3, a failed gradient check exits 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    CheckFailed,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Runtime(msg) => f.write_str(msg),
            CliError::CheckFailed => f.write_str("gradient check failed"),
        }
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::CheckFailed => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<polyalpha::Error> for CliError {
    fn from(e: polyalpha::Error) -> Self {
        use polyalpha::Error::*;
        match e {
            InvalidKey(_) | InvalidText(_) | InvalidSymbol(_) | InvalidConfig(_) | Json(_) => {
                CliError::Config(e.to_string())
            }
            ShapeMismatch(_) | NonFinite(_) | CheckpointFormat(_) | CheckpointIntegrity(_)
            | Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cipher(args) => commands::cipher(args),
        Command::Train(args) => commands::train(args),
        Command::Eval(args) => commands::eval(args),
        Command::Attack(args) => commands::attack(args),
        Command::Trace(args) => commands::trace(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Gradcheck(args) => commands::gradcheck(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
