//! The `wavepack` command line.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 usage error, 3 I/O error.
//! Settings resolve as flag, then `--config` file (`key=value`), then
//! default; the resolved settings are echoed to stderr.

mod commands;
mod config;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::dataset::Split;
use crate::error::Error;
use crate::packets::Ordering;
use crate::sparse_transform::BoundaryMode;
use crate::stats::ChannelPolicy;

pub use config::{parse_seeds, ConfigFile, Resolver};

#[derive(Debug)]
pub enum CliError {
    Invariant(String),
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invariant(m) => write!(f, "invariant failure: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Image { .. } | Error::Format(_) => CliError::Io(e.to_string()),
            Error::RankDeficient { .. } | Error::NonFinite { .. } => CliError::Invariant(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Inclusive seed list such as `0..4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_seeds(s).map(SeedList)
    }
}

impl fmt::Display for SeedList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureChoice {
    Packet,
    Pixel,
}

impl FromStr for FeatureChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "packet" | "packets" => Ok(FeatureChoice::Packet),
            "pixel" | "pixels" => Ok(FeatureChoice::Pixel),
            other => Err(format!("unknown feature kind `{other}` (packet, pixel)")),
        }
    }
}

impl fmt::Display for FeatureChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureChoice::Packet => "packet",
            FeatureChoice::Pixel => "pixel",
        })
    }
}

/// A dataset split or every image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitChoice {
    One(Split),
    All,
}

impl FromStr for SplitChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(SplitChoice::One(Split::Train)),
            "val" | "validation" => Ok(SplitChoice::One(Split::Val)),
            "test" => Ok(SplitChoice::One(Split::Test)),
            "all" => Ok(SplitChoice::All),
            other => Err(format!("unknown split `{other}` (train, val, test, all)")),
        }
    }
}

impl fmt::Display for SplitChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitChoice::One(s) => s.fmt(f),
            SplitChoice::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wavepack", version, about = "Boundary-wavelet packet transforms, statistics and linear packet classifiers")]
pub struct Cli {
    /// `key=value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check filter-bank conditions and S·A = I for boundary operators.
    Verify(VerifyArgs),
    /// Write a sparse analysis or synthesis operator as coordinate CSV.
    Transform(TransformArgs),
    /// Decompose images into WPK1 packet files.
    Packets(PacketsArgs),
    /// Per-class ln-scaled packet statistics as curve and heat-map CSVs.
    Stats(StatsArgs),
    /// Train linear classifiers over one or more seeds.
    Train(TrainArgs),
    /// Evaluate a WLM1 classifier on a dataset split.
    Evaluate(EvaluateArgs),
    /// Print packet labels.
    Labels(LabelsArgs),
    /// Generate the two-class synthetic PNG dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Filter name or `all`.
    #[arg(long)]
    pub filter: Option<String>,
    /// Signal length (1D) and image side (2D).
    #[arg(long)]
    pub size: Option<usize>,
    /// Checks levels 1 through this value.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub mode: Option<BoundaryMode>,
    /// Residual bound for S·A − I.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub wavelet: Option<String>,
    /// Signal length or square image side.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    /// 1 or 2.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub mode: Option<BoundaryMode>,
    /// Emit the synthesis operator instead of the analysis operator.
    #[arg(long)]
    pub synthesis: bool,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write a `#`/`.` sparsity mask.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PacketsArgs {
    /// Image files or directories of images.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub mode: Option<BoundaryMode>,
    #[arg(long)]
    pub ordering: Option<Ordering>,
    /// Also write long-form CSV next to each WPK1 file.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Directory with one subdirectory per class.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub mode: Option<BoundaryMode>,
    #[arg(long)]
    pub ordering: Option<Ordering>,
    /// `averaged` or `per-channel`.
    #[arg(long)]
    pub channel_policy: Option<ChannelPolicy>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// `packet` or `pixel`.
    #[arg(long)]
    pub features: Option<FeatureChoice>,
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub mode: Option<BoundaryMode>,
    /// Seed, inclusive range `0..4`, or list `1,3`.
    #[arg(long)]
    pub seed: Option<SeedList>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Start the two class weight rows as negatives of each other.
    #[arg(long)]
    pub symmetric_init: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `train`, `val`, `test` or `all`.
    #[arg(long)]
    pub split: Option<SplitChoice>,
    /// Seed used for the split.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Confusion matrix CSV destination.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelsArgs {
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub ordering: Option<Ordering>,
    /// Print the frequency-order grid instead of one label per line.
    #[arg(long)]
    pub grid: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Standard deviation of the high-frequency noise.
    #[arg(long)]
    pub noise: Option<f64>,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "{e}");
        return e.exit_code();
    }
    match commands::dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "wavepack: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Sizes the global rayon pool from `WAVEPACK_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("WAVEPACK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("WAVEPACK_THREADS must be a positive integer, got `{raw}`")))?;
    // A pool built earlier in the same process (tests) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
