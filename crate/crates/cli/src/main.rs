mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Evaluate latent feature representations by cross-validated
/// information loss.
#[derive(Parser, Debug)]
#[command(name = "clare", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one learner and write its report.
    Evaluate(RunArgs),
    /// Evaluate several learners on the same folds and rank them.
    Compare(RunArgs),
    /// Repeat the evaluation on successively smaller subsamples.
    Subsample {
        #[command(flatten)]
        run: RunArgs,
        /// Sample sizes, strictly descending, e.g. 306,153,76,38.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
    },
    /// Encode, decode or round-trip data through a saved codec.
    Apply(ApplyArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config key; repeatable. Applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Shorthand for `--set data=PATH`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Shorthand for `--set out=DIR`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shorthand for `--set learn=NAMES`.
    #[arg(long)]
    pub learn: Option<String>,
    /// Shorthand for `--set seed=N`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shorthand for `--set threads=N`; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Print per-(K, fold) progress with timings.
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Encode,
    Decode,
    Roundtrip,
}

#[derive(Args, Debug)]
pub struct ApplyArgs {
    /// Codec file written by `evaluate` (codec.clre).
    #[arg(long)]
    pub codec: PathBuf,
    /// Input matrix (CSV or CLRE). Latent scores when decoding.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub direction: Direction,
    /// Output matrix; a `.clre` extension writes binary, anything else CSV.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = match &cli.command {
        Command::Evaluate(r) | Command::Compare(r) | Command::Subsample { run: r, .. } => r.verbose,
        Command::Apply(_) => false,
    };
    env_logger::Builder::new()
        .filter_level(if verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .parse_env("CLARE_LOG")
        .init();

    let result = match cli.command {
        Command::Evaluate(run) => commands::evaluate(&run),
        Command::Compare(run) => commands::compare(&run),
        Command::Subsample { run, sizes } => commands::subsample(&run, &sizes),
        Command::Apply(args) => commands::apply(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
