//! `pigm ingest`: tick CSVs to a daily correlation ensemble.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pigm_core::ensemble::write_ensemble_with_metadata;
use pigm_core::ingest::{
    build_daily_ensemble, load_calendar, CalendarConfig, IngestOptions, PairMap,
    ZeroVariancePolicy,
};

use crate::meta::Meta;
use crate::{CliError, CmdResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroVarianceArg {
    /// Fail the day (a constant return series has no correlation).
    Error,
    /// Write 0 for the affected entries and record them in the summary.
    ZeroAndFlag,
}

impl From<ZeroVarianceArg> for ZeroVariancePolicy {
    fn from(a: ZeroVarianceArg) -> Self {
        match a {
            ZeroVarianceArg::Error => ZeroVariancePolicy::Error,
            ZeroVarianceArg::ZeroAndFlag => ZeroVariancePolicy::ZeroAndFlag,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Tick CSV files (`pair,timestamp,bid,ask`, timestamp `YYYYMMDD
    /// HH:MM:SS.mmm` UTC).
    #[arg(long = "ticks", required = true, num_args = 1..)]
    pub ticks: Vec<PathBuf>,

    /// Comma-separated pair symbols; their order fixes the matrix indices.
    #[arg(long, value_delimiter = ',', required = true)]
    pub pairs: Vec<String>,

    /// Calendar JSON with excluded dates and the grid interval.
    #[arg(long)]
    pub calendar: Option<PathBuf>,

    /// Grid interval in minutes; overrides the calendar value.
    #[arg(long)]
    pub interval_minutes: Option<u32>,

    /// Flag (day, pair) combinations with fewer defined return intervals.
    #[arg(long, default_value_t = 1)]
    pub min_valid_intervals: usize,

    /// What to do when a pair's return series has zero variance on a day.
    #[arg(long, value_enum, default_value_t = ZeroVarianceArg::Error)]
    pub zero_variance: ZeroVarianceArg,

    /// Malformed tick rows tolerated per file before the file is rejected.
    #[arg(long, default_value_t = 0)]
    pub error_budget: usize,

    /// Recorded in the artifact metadata; ingestion itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output ensemble path (`.json` for JSON, anything else for CSV).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &IngestArgs) -> CmdResult {
    let pairs = PairMap::new(args.pairs.iter().cloned())
        .map_err(|e| CliError::usage(e.to_string()))?;

    let mut calendar = match &args.calendar {
        Some(path) => load_calendar(path)?,
        None => CalendarConfig::default(),
    };
    if let Some(minutes) = args.interval_minutes {
        calendar.interval_minutes = minutes;
    }

    let options = IngestOptions {
        min_valid_intervals: args.min_valid_intervals,
        zero_variance_policy: args.zero_variance.into(),
        error_budget: args.error_budget,
    };

    let report = build_daily_ensemble(&args.ticks, &pairs, &calendar, &options)?;

    let meta = Meta::new(args, args.seed);
    let mut kv = meta.kv();
    kv.push(("pairs".into(), args.pairs.join(",")));
    kv.push(("interval_minutes".into(), calendar.interval_minutes.to_string()));
    write_ensemble_with_metadata(&args.out, &report.ensemble, &kv)?;

    println!(
        "wrote {} day(s) of dim {} to {}",
        report.ensemble.len(),
        report.ensemble.dim(),
        args.out.display()
    );
    println!(
        "excluded by calendar: {}; tickless days in span: {}; malformed rows: {}",
        report.excluded_days.len(),
        report.empty_days.len(),
        report.malformed_rows
    );
    if !report.low_coverage.is_empty() {
        println!("low-coverage flags: {}", report.low_coverage.len());
    }
    if !report.zeroed_entries.is_empty() {
        println!("zeroed entries: {}", report.zeroed_entries.len());
    }
    Ok(())
}
