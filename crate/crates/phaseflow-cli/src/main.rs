//! Command-line front end. Every subcommand is a thin composition of
//! library operations; this layer only parses flags, moves bytes, and maps
//! errors onto stable exit codes.

mod commands;
mod pairing;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use phaseflow::SmoothingConfig;

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  usage or validation error (bad flags, malformed input, mismatched shapes)
  1  runtime failure (I/O error, no feasible decoding path)

Environment:
  PHASEFLOW_QUIET=1  silence informational summaries (results and errors still print)";

#[derive(Parser)]
#[command(
    name = "phaseflow",
    version,
    about = "Temporally coherent phase recognition over per-frame classifier scores",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an HMM from paired feature/label files
    Train(TrainArgs),
    /// Apply causal trailing-mean smoothing to a feature file
    Smooth(SmoothArgs),
    /// Decode a feature file into per-frame phase labels
    Decode(DecodeArgs),
    /// Score predicted labels against ground truth
    Eval(EvalArgs),
    /// Replicate labels up to a higher frame rate
    Upsample(UpsampleArgs),
    /// Write a synthetic scenario dataset to disk
    Gen(GenArgs),
    /// Compare the three predictors across consecutive seeds
    Bench(BenchArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Feature files, or directories holding *.features.csv
    #[arg(
        long,
        num_args = 1..,
        required_unless_present = "manifest",
        conflicts_with = "manifest"
    )]
    features: Vec<PathBuf>,
    /// Label files, or directories holding *.labels.csv
    #[arg(
        long,
        num_args = 1..,
        required_unless_present = "manifest",
        conflicts_with = "manifest"
    )]
    labels: Vec<PathBuf>,
    /// CSV manifest with one `features_path,labels_path` row per sequence
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output model JSON path
    #[arg(long)]
    out: PathBuf,
    /// Fit diagonal covariances instead of full ones
    #[arg(long = "diag-cov")]
    diag_cov: bool,
    /// Number of phases (default: highest label seen + 1)
    #[arg(long)]
    classes: Option<usize>,
    /// Frame rate of the input files
    #[arg(long, default_value_t = 1.0)]
    fps: f64,
}

#[derive(Args)]
struct SmoothArgs {
    /// Input feature CSV or JSONL ("-" for stdin)
    #[arg(long = "in")]
    input: PathBuf,
    /// Output feature CSV
    #[arg(long)]
    out: PathBuf,
    /// Trailing window length in frames
    #[arg(long, default_value_t = SmoothingConfig::DEFAULT_WINDOW)]
    window: usize,
    /// Frame rate of the input file
    #[arg(long, default_value_t = 1.0)]
    fps: f64,
}

#[derive(Args)]
struct DecodeArgs {
    /// Model JSON written by `train` or `gen`
    #[arg(long)]
    model: PathBuf,
    /// Input feature CSV or JSONL ("-" for stdin)
    #[arg(long = "in")]
    input: PathBuf,
    /// Output label CSV
    #[arg(long)]
    out: PathBuf,
    /// Decoding mode
    #[arg(long, value_enum)]
    mode: Mode,
    /// Smooth scores in-process before decoding
    #[arg(long = "smooth-window")]
    smooth_window: Option<usize>,
    /// Frame rate of the input file
    #[arg(long, default_value_t = 1.0)]
    fps: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Whole-sequence Viterbi
    Offline,
    /// Per-frame prefix decoding; frames are consumed strictly in order
    Online,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted label CSV
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth label CSV
    #[arg(long)]
    gt: PathBuf,
    /// Temporal tolerance applied to per-class Jaccard
    #[arg(long = "margin-seconds", default_value_t = 10.0)]
    margin_seconds: f64,
    /// Frame rate of both label files
    #[arg(long, default_value_t = 1.0)]
    fps: f64,
    /// Number of phase classes
    #[arg(long, default_value_t = 8)]
    classes: usize,
    /// Write a per-frame comparison CSV
    #[arg(long = "dump-frames")]
    dump_frames: Option<PathBuf>,
    /// Print the report as JSON instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct UpsampleArgs {
    /// Input label CSV
    #[arg(long = "in")]
    input: PathBuf,
    /// Output label CSV
    #[arg(long)]
    out: PathBuf,
    /// Replication factor
    #[arg(long, default_value_t = 25)]
    factor: usize,
    /// Exact output length in frames
    #[arg(long = "target-frames")]
    target_frames: usize,
    /// Frame rate of the input file
    #[arg(long, default_value_t = 1.0)]
    fps: f64,
}

/// Scenario shape flags shared by `gen` and `bench`. Omitted values come
/// from `--config` when given, otherwise from the built-in defaults.
#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON; missing fields take defaults, flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hidden states K
    #[arg(long)]
    classes: Option<usize>,
    /// Observation dimension D
    #[arg(long)]
    dims: Option<usize>,
    /// Frames per sampled sequence
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long = "train-sequences")]
    train_sequences: Option<usize>,
    #[arg(long = "test-sequences")]
    test_sequences: Option<usize>,
    /// Emission covariance is noise-scale * I
    #[arg(long = "noise-scale")]
    noise_scale: Option<f64>,
    /// Expected frames per non-final state
    #[arg(long)]
    dwell: Option<f64>,
    /// Causal smoothing window used by the harness
    #[arg(long = "smoothing-window")]
    smoothing_window: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn resolve(&self) -> phaseflow::Result<phaseflow::ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| phaseflow::Error::Parse {
                    line: e.line() as u64,
                    msg: e.to_string(),
                })?
            }
            None => phaseflow::ScenarioConfig::default(),
        };
        if let Some(v) = self.classes {
            cfg.classes = v;
        }
        if let Some(v) = self.dims {
            cfg.dims = v;
        }
        if let Some(v) = self.frames {
            cfg.frames = v;
        }
        if let Some(v) = self.train_sequences {
            cfg.train_sequences = v;
        }
        if let Some(v) = self.test_sequences {
            cfg.test_sequences = v;
        }
        if let Some(v) = self.noise_scale {
            cfg.noise_scale = v;
        }
        if let Some(v) = self.dwell {
            cfg.dwell = v;
        }
        if let Some(v) = self.smoothing_window {
            cfg.smoothing_window = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Directory receiving the generated files (created if missing)
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of consecutive seeds to run
    #[arg(long, default_value_t = 10)]
    seeds: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                phaseflow::Error::Io(_) | phaseflow::Error::NoFeasiblePath { .. } => {
                    ExitCode::from(1)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}
