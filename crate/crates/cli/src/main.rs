//! `roidiff`: compare screenshots, segment pages, train and evaluate the
//! false-positive filter, label region pairs and generate synthetic corpora.
//!
//! Exit codes: 0 success (or compatible pages), 1 incompatible pages,
//! 2 any error.

mod compare;
mod config;
mod eval;
mod label;
mod output;
mod segment;
mod synth;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "roidiff",
    version,
    about = "Screenshot comparison by corner segmentation and moment matching"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every verb. Flags override values from `--config`.
/// `--model` is per verb: a model file for `compare` and `eval`, a model
/// kind for `train`.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (or file, for `train`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write intermediate images next to the main outputs.
    #[arg(long, global = true)]
    pub debug_images: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare a baseline screenshot with one under test.
    Compare(compare::CompareArgs),
    /// Segment one page into regions of interest.
    Segment(segment::SegmentArgs),
    /// Train a tree or network on a labelled feature CSV.
    Train(train::TrainArgs),
    /// Rate exported region pairs interactively.
    Label(label::LabelArgs),
    /// Generate a synthetic page-pair corpus with ground truth.
    Synth(synth::SynthArgs),
    /// Score the pipeline against a corpus manifest.
    Eval(eval::EvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Tree,
    Nn,
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = RunConfig::resolve(&cli.common)?;
    match cli.command {
        Command::Compare(a) => compare::run(&cfg, a),
        Command::Segment(a) => segment::run(&cfg, a),
        Command::Train(a) => train::run(&cfg, a),
        Command::Label(a) => label::run(&cfg, a),
        Command::Synth(a) => synth::run(&cfg, a),
        Command::Eval(a) => eval::run(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
