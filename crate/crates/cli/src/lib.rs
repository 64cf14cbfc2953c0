//! Command-line front end: image ingestion, batch evaluation, loss/gradient
//! computation, oracle comparison, benchmarking, and the optimization demo.
//!
//! Exit codes: 0 success, 1 partial per-image failures, 2 configuration or
//! I/O failure.

pub mod commands;
pub mod ingest;
pub mod report;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use wfbeta::{default_alpha, DeltaMode, ErrorNorm, ExponentForm, WfmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExponentFormArg {
    /// squared distance in the Gaussian exponent
    Squared,
    /// plain distance in the Gaussian exponent
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeltaModeArg {
    /// squared distance within the phi window, infinite beyond
    Banded,
    /// plain Euclidean distance, unbounded
    Plain,
}

#[derive(Debug, Parser)]
#[command(name = "wfbeta", version, about = "Weighted F-measure evaluation and loss toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for commands that draw random instances.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for batch evaluation (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Ground-truth binarization threshold on the 8-bit scale; pixels at or
    /// above it are foreground.
    #[arg(long, global = true, default_value_t = 128)]
    pub gt_threshold: u8,

    /// Lift the pixel cap on the exact oracle (quadratic runtime).
    #[arg(long, global = true)]
    pub allow_large_oracle: bool,

    /// Precision/recall trade-off of the weighted F score.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub beta: f64,

    /// Convolution kernel half-width.
    #[arg(long, global = true, default_value_t = 9)]
    pub theta: usize,

    /// Gaussian bandwidth; defaults to theta / 4.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,

    /// False-positive distance window half-width.
    #[arg(long, global = true, default_value_t = 5)]
    pub phi: usize,

    /// False-positive weight decay constant; defaults to ln(0.5) / 5.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = ExponentFormArg::Squared)]
    pub exponent_form: ExponentFormArg,

    #[arg(long, global = true, value_enum, default_value_t = DeltaModeArg::Banded)]
    pub delta_mode: DeltaModeArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the metric suite over paired prediction/ground-truth images.
    Eval {
        /// Prediction file or directory (8-bit grayscale PNG/PGM).
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth file or directory, paired to predictions by stem.
        #[arg(long)]
        gt: PathBuf,
    },
    /// Per-image loss values, optionally dumping gradient images.
    Loss {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Write 16-bit gradient PNGs plus JSON sidecars into this directory.
        #[arg(long)]
        grad_dir: Option<PathBuf>,
    },
    /// Exact weighted F per pair (size-capped brute force).
    Oracle {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Exact-vs-approximate deviation sweep on seeded random instances.
    Compare {
        /// Square grid sizes to sweep.
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        sizes: Vec<usize>,
        /// Instances per size.
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Wall-clock benchmark of the exact and approximate paths.
    Bench {
        #[arg(long, default_value_t = 224)]
        size: usize,
        /// Timed repetitions after one warm-up (at least 5).
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Gradient-descent demo on a single mask.
    Optimize {
        /// Mask image to fit.
        #[arg(long, conflicts_with = "disk", required_unless_present = "disk")]
        gt: Option<PathBuf>,
        /// Synthetic centered disk in a square frame of this size.
        #[arg(long)]
        disk: Option<usize>,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        step_size: f64,
        /// Write the final prediction map as a 16-bit PNG.
        #[arg(long)]
        map_out: Option<PathBuf>,
    },
}

impl Cli {
    /// Metric parameters assembled from the flags.
    pub fn params(&self) -> WfmParams {
        WfmParams {
            beta: self.beta,
            sigma: self.sigma.unwrap_or(self.theta as f64 / 4.0),
            alpha: self.alpha.unwrap_or_else(default_alpha),
            theta: self.theta,
            phi: self.phi,
            exponent_form: match self.exponent_form {
                ExponentFormArg::Squared => ExponentForm::SquaredDistance,
                ExponentFormArg::Distance => ExponentForm::Distance,
            },
            delta_mode: match self.delta_mode {
                DeltaModeArg::Banded => DeltaMode::SquaredBanded,
                DeltaModeArg::Plain => DeltaMode::PlainUnbounded,
            },
            error_norm: ErrorNorm::L2,
        }
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
