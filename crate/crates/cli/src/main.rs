//! `gapkit`: modality-gap diagnostics, gap closing and robustness sweeps
//! over embedding files.
//!
//! Exit codes: 0 on success, 2 for invalid arguments or configuration, 3
//! for data errors (unreadable or malformed files, mismatched dimensions).

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "gapkit", version, about = "Analyze, close and stress-test the modality gap between two embedding sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gap vector, orthogonality of the gap to both modalities, and (with
    /// --tau, for paired rows) contrastive-loss diagnostics.
    Analyze(AnalyzeArgs),
    /// Translate one modality along the gap direction orthogonal to its
    /// principal subspace and write the result.
    Close(CloseArgs),
    /// Nearest-neighbor robustness of retrieval from X under noise, swept
    /// over closing fractions.
    Robustness(RobustnessArgs),
    /// Robustness under quantization of both modalities, and the closing
    /// fraction that minimizes the quantized gap.
    Quantize(QuantizeArgs),
    /// Run a gradient-descent simulation described by a JSON config.
    Simulate(SimulateArgs),
    /// Correlation score d(C) of the difference between clean and noisy
    /// copies of the same embeddings.
    DiagnoseNoise(DiagnoseNoiseArgs),
}

#[derive(Args, Debug)]
struct Pair {
    /// Modality X (EMB1, or CSV when the name ends in .csv)
    #[arg(long)]
    x: PathBuf,
    /// Modality Y (EMB1, or CSV when the name ends in .csv)
    #[arg(long)]
    y: PathBuf,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    pair: Pair,
    /// Temperature for the loss and soft-assignment statistics
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MoveArg {
    X,
    Y,
}

#[derive(Args, Debug)]
struct CloseArgs {
    #[command(flatten)]
    pair: Pair,
    /// Modality to translate toward the other
    #[arg(long = "move", value_enum)]
    moved: MoveArg,
    /// Principal directions carrying more than this fraction of the moved
    /// modality's variance are projected out of the gap
    #[arg(long, allow_hyphen_values = true)]
    epsilon: f64,
    /// Closing fraction: 1 matches the means along the closing direction
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    /// Translated modality, written as f64 EMB1
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NoiseArg {
    Gaussian,
    Uniform,
    Laplace,
    Rademacher,
    Rank1,
}

#[derive(Args, Debug)]
struct RobustnessArgs {
    #[command(flatten)]
    pair: Pair,
    #[arg(long, value_enum)]
    noise: NoiseArg,
    /// Per-coordinate standard deviation of the noise
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    /// Noise samples per closing fraction
    #[arg(long)]
    k: usize,
    /// Closing fractions as start:stop:step, both ends inclusive
    #[arg(long, allow_hyphen_values = true)]
    lambda_grid: String,
    #[arg(long)]
    seed: u64,
    /// LBL1 file with, for every row of Y, the index of its matching row in X
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QuantizeArgs {
    #[command(flatten)]
    pair: Pair,
    #[arg(long)]
    levels: usize,
    #[arg(long, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, allow_hyphen_values = true)]
    hi: f64,
    /// Closing fractions as start:stop:step, both ends inclusive
    #[arg(long, allow_hyphen_values = true)]
    lambda_grid: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON experiment config; relative paths inside it are resolved
    /// against its directory
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DiagnoseNoiseArgs {
    #[arg(long)]
    clean: PathBuf,
    /// One or more perturbed copies of the clean embeddings
    #[arg(long, num_args = 1.., required = true)]
    noisy: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Why a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) => m,
        }
    }
}

impl From<gapkit_core::Error> for Failure {
    fn from(e: gapkit_core::Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze(a) => commands::analyze(&a.pair.x, &a.pair.y, a.tau, &a.out),
        Command::Close(a) => {
            let moved = match a.moved {
                MoveArg::X => gapkit_core::Modality::X,
                MoveArg::Y => gapkit_core::Modality::Y,
            };
            commands::close(&a.pair.x, &a.pair.y, moved, a.epsilon, a.lambda, &a.out)
        }
        Command::Robustness(a) => {
            use gapkit_core::NoiseModel;
            let sigma = a.sigma;
            let model = match a.noise {
                NoiseArg::Gaussian => NoiseModel::Gaussian { sigma },
                NoiseArg::Uniform => NoiseModel::Uniform { sigma },
                NoiseArg::Laplace => NoiseModel::Laplace { sigma },
                NoiseArg::Rademacher => NoiseModel::Rademacher { sigma },
                NoiseArg::Rank1 => NoiseModel::Rank1Shift { sigma },
            };
            let grid = commands::parse_lambda_grid(&a.lambda_grid)?;
            commands::robustness(&a.pair.x, &a.pair.y, model, a.k, &grid, a.seed, a.labels.as_deref(), &a.out)
        }
        Command::Quantize(a) => {
            let grid = commands::parse_lambda_grid(&a.lambda_grid)?;
            let best = commands::quantize(&a.pair.x, &a.pair.y, a.levels, a.lo, a.hi, &grid, &a.out)?;
            println!("{best}");
            Ok(())
        }
        Command::Simulate(a) => commands::simulate(&a.config, &a.out),
        Command::DiagnoseNoise(a) => commands::diagnose_noise(&a.clean, &a.noisy, &a.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests also arrive here
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gapkit: error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
