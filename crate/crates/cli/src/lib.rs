//! Batch front end for `stereo_seld`: dataset extraction, channel-swap
//! expansion, normalizer fitting and scoring.
//!
//! Exit codes: 0 success, 1 partial or total failure, 2 usage or
//! configuration error.

pub mod acs_expand;
pub mod config;
pub mod dataset;
pub mod extract;
pub mod normalizer;
pub mod score;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use acs_expand::cmd_acs_expand;
pub use config::PipelineConfig;
pub use extract::cmd_extract;
pub use normalizer::cmd_fit_normalizer;
pub use score::cmd_score;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Failure {
    pub stem: String,
    pub message: String,
}

impl Failure {
    pub fn new(stem: &str, message: impl Into<String>) -> Self {
        Failure {
            stem: stem.to_string(),
            message: message.into(),
        }
    }
}

/// Result of a command that ran to completion, possibly with per-clip
/// failures.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub failures: Vec<Failure>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_FAILURE
        }
    }
}

pub(crate) fn thread_pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

#[derive(Debug, Parser)]
#[command(name = "stereo-seld", version, about = "Stereo SELD feature extraction and scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write feature stacks, targets and a manifest for every clip.
    Extract(CommonArgs),
    /// Add a channel-swapped `<stem>_acs` copy of every clip to the dataset.
    AcsExpand(CommonArgs),
    /// Fit distance normalization statistics on the dataset metadata.
    FitNormalizer(CommonArgs),
    /// Score prediction CSVs against reference CSVs.
    Score {
        pred_dir: PathBuf,
        ref_dir: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// `key=value` configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override any configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    dataset_root: Option<String>,
    #[arg(long)]
    output_root: Option<String>,
    /// MSI or MSIC.
    #[arg(long)]
    feature_set: Option<String>,
    /// none, ITFM, FAFS or ACS-offline.
    #[arg(long)]
    augment_mode: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Normalizer sidecar to load (extract) or write (fit-normalizer).
    #[arg(long)]
    normalizer: Option<String>,
    /// m, cm or auto.
    #[arg(long)]
    distance_unit: Option<String>,
}

impl CommonArgs {
    fn resolve(&self, env: &dyn Fn(&str) -> Option<String>) -> anyhow::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_env(env)?;
        let flags = [
            ("dataset_root", &self.dataset_root),
            ("output_root", &self.output_root),
            ("feature_set", &self.feature_set),
            ("augment_mode", &self.augment_mode),
            ("realizations", &self.realizations),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("normalizer", &self.normalizer),
            ("distance_unit", &self.distance_unit),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for assignment in &self.set {
            cfg.apply_assignment(assignment)?;
        }
        Ok(cfg)
    }
}

/// Runs the tool with explicit arguments and environment; returns the exit
/// code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(
    args: I,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version also arrive here.
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let common = match &cli.command {
        Command::Extract(c) | Command::AcsExpand(c) | Command::FitNormalizer(c) => c,
        Command::Score { common, .. } => common,
    };
    let cfg = match common.resolve(env) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = writeln!(err, "configuration error: {e:#}");
            return EXIT_USAGE;
        }
    };
    if common.print_config {
        let _ = write!(out, "{}", cfg.render());
    }
    if let Err(e) = cfg.validate() {
        let _ = writeln!(err, "configuration error: {e:#}");
        return EXIT_USAGE;
    }
    if common.print_config {
        return EXIT_OK;
    }

    let result = match &cli.command {
        Command::Extract(_) => cmd_extract(&cfg),
        Command::AcsExpand(_) => cmd_acs_expand(&cfg),
        Command::FitNormalizer(_) => cmd_fit_normalizer(&cfg),
        Command::Score { pred_dir, ref_dir, .. } => cmd_score(pred_dir, ref_dir, &cfg),
    };
    match result {
        Ok(outcome) => {
            let _ = write!(out, "{}", outcome.report);
            for f in &outcome.failures {
                let _ = writeln!(err, "failed: {}: {}", f.stem, f.message);
            }
            outcome.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}
