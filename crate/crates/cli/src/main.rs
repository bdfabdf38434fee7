//! `fact`: Fourier amplitude augmentation, co-teacher training and the
//! accompanying analyses from the command line.
//!
//! Exit codes: 0 success, 1 training diverged, 2 bad configuration or input,
//! 3 file-system or image decoding failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fact_core::augment::Strategy;
use fact_core::corpus::PairingStrategy;
use fact_core::coteacher::Ablation;
use fact_core::FactError;

#[derive(Parser)]
#[command(
    name = "fact",
    version,
    about = "Fourier amplitude augmentation and co-teacher training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Augment one image pair or every image in a directory.
    Augment(AugmentArgs),
    /// Generate the synthetic multi-domain corpus as PNGs plus a manifest.
    Synth(SynthArgs),
    /// Train a student/teacher pair on a corpus.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a corpus.
    Eval(EvalArgs),
    /// Cosine similarity of phase-only and amplitude-only reconstructions to edge maps.
    AnalyzeEdges(EdgesArgs),
    /// Train on original, phase-only and amplitude-only images and compare across domains.
    AnalyzePhase(PhaseArgs),
    /// Linear-probe weight mass on amplitude vs phase features, with and without mixing.
    AnalyzeShrinkage(ShrinkageArgs),
}

#[derive(Args)]
struct Common {
    /// TOML config; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Seed; falls back to the config file, then FACT_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    common: Common,
    /// Image file or directory of images.
    #[arg(long, conflicts_with = "pair")]
    input: Option<PathBuf>,
    /// Explicit pair; both counterparts are written.
    #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"])]
    pair: Option<Vec<PathBuf>>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    bernoulli_p: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    const_amplitude: Option<f64>,
    #[arg(long)]
    shared_lambda: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    domains: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    n_per_cell: Option<usize>,
    /// Image side length.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    amplitude_noise: Option<f64>,
    #[arg(long)]
    train_fraction: Option<f64>,
}

/// Optimisation and model flags shared by `train` and `analyze-phase`.
#[derive(Args)]
struct TrainFlags {
    /// Corpus directory containing manifest.toml.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Conv block widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    conv: Option<Vec<usize>>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: TrainFlags,
    /// Component preset: baseline, A, B, C, D, E or full.
    #[arg(long)]
    ablation: Option<Ablation>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    ema_momentum: Option<f64>,
    #[arg(long)]
    ramp_up_epochs: Option<usize>,
    #[arg(long)]
    pairing: Option<PairingStrategy>,
    #[arg(long)]
    hflip: bool,
    /// Domain index to hold out; training uses the others.
    #[arg(long)]
    held_out: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// all, train or val.
    #[arg(long)]
    split: Option<commands::EvalSplit>,
}

#[derive(Args)]
struct EdgesArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Directory of images; defaults to the bundled set.
    #[arg(long)]
    images: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args)]
struct ShrinkageArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
}

fn run(cli: Cli) -> fact_core::Result<()> {
    match cli.command {
        Command::Augment(a) => commands::augment(a),
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::AnalyzeEdges(a) => commands::analyze_edges(a),
        Command::AnalyzePhase(a) => commands::analyze_phase(a),
        Command::AnalyzeShrinkage(a) => commands::analyze_shrinkage(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                FactError::Divergence { .. } => 1,
                FactError::Io { .. } | FactError::Image { .. } | FactError::Checkpoint(_) => 3,
                _ => 2,
            })
        }
    }
}
