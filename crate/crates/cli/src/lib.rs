//! Batch front end for `psdshm`: simulate datasets, estimate PSDs, run the
//! detectors, sweep ROC curves and tabulate reports. Every output is a
//! plain CSV (or text table) under the output directory.

mod commands;
pub mod config;

use clap::{Args, Parser, Subcommand};
use psdshm::ErrorCategory;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub use commands::RunConfig;

/// Environment variable that overrides the output directory of the config
/// file (an explicit `--out` still wins).
pub const OUT_DIR_ENV: &str = "PSDSHM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "psdshm", version, about = "Statistical damage detection for guided-wave SHM")]
struct Cli {
    /// `key = value` config file with [run], [welch] and [simulate] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default `psdshm-out`).
    #[arg(long = "out", global = true, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-signal Welch PSDs plus theoretical and experimental baseline bands.
    Psd(RunArgs),
    /// Statistic curves, per-record verdicts and the summary table.
    Detect(RunArgs),
    /// Decision-based ROC curves over an alpha grid.
    Roc(RunArgs),
    /// Write a synthetic attenuation-ladder dataset.
    Simulate(SimArgs),
    /// Re-render the summary table from a report tally CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Path id to analyse (default: every path in the manifest).
    #[arg(long)]
    pub path: Option<String>,
    /// Packet window name (default: the manifest's first window).
    #[arg(long)]
    pub window: Option<String>,
    /// Comma-separated subset of F, Fm, Z, DI-Janapati, DI-Qiu.
    #[arg(long)]
    pub metrics: Option<String>,
    /// Comma-separated significance levels.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Comma-separated ROC alpha grid (default: 61 log-spaced, 1e-6 to 1).
    #[arg(long)]
    pub alpha_grid: Option<String>,
    #[arg(long)]
    pub holdout: Option<usize>,
    #[arg(long)]
    pub band_lo_hz: Option<f64>,
    #[arg(long)]
    pub band_hi_hz: Option<f64>,
    /// Experimental band method: normal or percentile.
    #[arg(long)]
    pub band_method: Option<String>,
    /// Janapati variant: normalized or as-printed.
    #[arg(long)]
    pub janapati: Option<String>,
    /// Shuffle healthy records with this seed before the train/test split.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub segment_len: Option<usize>,
    #[arg(long)]
    pub overlap: Option<f64>,
    #[arg(long)]
    pub nfft: Option<usize>,
    /// Welch window: hamming, bartlett or rectangular.
    #[arg(long)]
    pub welch_window: Option<String>,
    #[arg(long)]
    pub detrend: Option<bool>,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_baseline: Option<usize>,
    /// Number of attenuation steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Attenuation of the last step.
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub center_freq: Option<f64>,
    #[arg(long)]
    pub n_cycles: Option<u32>,
    /// Peak-to-peak volts.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// hamming or hanning.
    #[arg(long)]
    pub envelope: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct ReportArgs {
    /// Tally CSV written by `detect` (default: <out>/detect/reports.csv).
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// Print `text` or `csv` to stdout.
    #[arg(long, default_value = "text")]
    pub format: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Core(#[from] psdshm::Error),
}

impl CliError {
    /// 2 validation, 3 computation, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Validation => 2,
                ErrorCategory::Computation => 3,
                ErrorCategory::Io => 4,
            },
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing progress to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{}", e.render());
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let file = match &cli.config {
        Some(path) => config::FileConfig::load(path)?,
        None => config::FileConfig::default(),
    };
    let out_dir = cli
        .out_dir
        .or_else(|| file.get_path("run", "out_dir"))
        .unwrap_or_else(|| PathBuf::from("psdshm-out"));
    match cli.command {
        Command::Psd(args) => commands::psd(&RunConfig::resolve(args, &file, out_dir)?, stdout)?,
        Command::Detect(args) => commands::detect(&RunConfig::resolve(args, &file, out_dir)?, stdout)?,
        Command::Roc(args) => commands::roc(&RunConfig::resolve(args, &file, out_dir)?, stdout)?,
        Command::Simulate(args) => commands::simulate(&args, &file, &out_dir, stdout)?,
        Command::Report(args) => commands::report(&args, &out_dir, stdout)?,
    }
    Ok(())
}
