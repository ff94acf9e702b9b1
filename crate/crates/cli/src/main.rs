//! `pigm` — batch pipeline for the permutation-invariant Gaussian matrix
//! model on correlation ensembles.
//!
//! Stages communicate through plain files so every intermediate is
//! inspectable and re-runnable: `ingest` turns tick CSVs into a daily
//! correlation ensemble, `observables`/`fit`/`predict`/`report` run the model
//! workflow on it, `anomaly` and `similarity` run the event studies, `sample`
//! draws synthetic ensembles, and `selftest` exercises the numerical core on
//! the host machine. Every artifact embeds a metadata block (tool version,
//! config hash, seed), and rerunning a stage with identical inputs and seed
//! reproduces its outputs byte for byte.

mod commands;
mod inputs;
mod meta;
mod numfmt;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Failure channel deciding the exit code: 2 for command-line usage errors,
/// 1 for data or validation errors encountered while running.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<pigm_core::Error> for CliError {
    fn from(e: pigm_core::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

pub type CmdResult = Result<(), CliError>;

const FORMAT_HELP: &str = "\
FILE FORMATS
  Ensemble CSV    `# dim: D` line, optional `# key: value` metadata lines,
                  header `label,i,j,value`, then one row per upper-triangle
                  entry (0-based, i < j). Values print in the shortest form
                  that parses back to the same double, so round-trips are
                  bit-exact.
  Ensemble JSON   {\"dim\": D, \"days\": [{\"label\": \"...\", \"upper\": [..]}],
                  \"metadata\": [[\"key\",\"value\"], ..]} with D(D-1)/2 upper
                  entries per day. Chosen when the output path ends in .json.
  Tick CSV        `pair,timestamp,bid,ask` rows, timestamp
                  `YYYYMMDD HH:MM:SS.mmm` (UTC). A literal header row is
                  skipped. Prices must be positive decimals.
  Calendar JSON   {\"excluded_dates\": [\"2020-04-10\", ..],
                  \"interval_minutes\": 5}. Interval must divide 1440.
  Events file     JSON array of ISO dates, a JSON object with a \"dates\"
                  array, or plain text with one date per line (an optional
                  `date` header line and `#` comments are skipped).
  Report CSV      `# key: value` metadata lines (tool, config, seed, summary
                  statistics), then a header row and one data row per item.
                  Numbers carry 12 significant digits.
  Report JSON     {\"meta\": {tool, version, config, seed}, ...} with the
                  same numbers at full double precision.

EXIT CODES
  0 success; 1 data or validation error; 2 usage error.";

#[derive(Parser)]
#[command(
    name = "pigm",
    version,
    about = "Permutation-invariant Gaussian matrix model pipeline for correlation ensembles",
    after_long_help = FORMAT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a daily correlation ensemble from tick CSV files.
    Ingest(commands::ingest::IngestArgs),
    /// Evaluate invariant observables on every day of an ensemble.
    Observables(commands::observables::ObservablesArgs),
    /// Fit the four model couplings by exact moment matching.
    Fit(commands::fit::FitArgs),
    /// Predict observable expectations and model sigmas from fitted couplings.
    Predict(commands::predict::PredictArgs),
    /// Theory-vs-data deviation and band-calibration report.
    Report(commands::report::ReportArgs),
    /// Rank days by outlier distance and test event enrichment.
    Anomaly(commands::anomaly::AnomalyArgs),
    /// Rank day pairs by similarity under two metrics and compare rankings.
    Similarity(commands::similarity::SimilarityArgs),
    /// Draw a synthetic ensemble from explicit couplings.
    Sample(commands::sample::SampleArgs),
    /// Run the numerical invariant suites at D = 4, 6, 8.
    Selftest(commands::selftest::SelftestArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest::run(&args),
        Command::Observables(args) => commands::observables::run(&args),
        Command::Fit(args) => commands::fit::run(&args),
        Command::Predict(args) => commands::predict::run(&args),
        Command::Report(args) => commands::report::run(&args),
        Command::Anomaly(args) => commands::anomaly::run(&args),
        Command::Similarity(args) => commands::similarity::run(&args),
        Command::Sample(args) => commands::sample::run(&args),
        Command::Selftest(args) => commands::selftest::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
