//! Quote-tick ingestion: CSV parsing, last-tick grid sampling, log returns,
//! and daily realized-correlation matrices.
//!
//! The pipeline is pair-by-pair and day-by-day: ticks are bucketed into UTC
//! days, each pair's mid-price is sampled on a regular grid by carrying the
//! most recent quote forward (never across a day boundary), log returns are
//! taken between consecutive grid points, and each day's correlation matrix
//! is estimated from the jointly-defined return intervals of every pair.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::Deserialize;

use crate::ensemble::{CorrelationMatrix, Ensemble};
use crate::error::{Error, Result};

/// Tick timestamp layout: `YYYYMMDD HH:MM:SS.mmm`, UTC.
const TIMESTAMP_FORMAT: &str = "%Y%m%d %H:%M:%S%.3f";
const MS_PER_MINUTE: i64 = 60_000;
const MS_PER_DAY: i64 = 86_400_000;
/// Sampling intervals with paper-backed calibration.
pub const SUPPORTED_INTERVALS: [u32; 3] = [5, 10, 15];
pub const DEFAULT_INTERVAL_MINUTES: u32 = 5;

/// Ordered mapping between currency-pair symbols and matrix indices.
#[derive(Debug, Clone)]
pub struct PairMap {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl PairMap {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a pair map needs at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (k, s) in symbols.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidArgument("empty pair symbol".into()));
            }
            if index.insert(s.clone(), k).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate pair symbol {s:?}")));
            }
        }
        Ok(Self { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, pair: usize) -> &str {
        &self.symbols[pair]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

/// One best-quote update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuoteTick {
    /// Position of the currency pair in the [`PairMap`].
    pub pair: usize,
    /// Milliseconds since the Unix epoch, UTC.
    pub timestamp_ms: i64,
    pub bid: f64,
    pub ask: f64,
}

impl QuoteTick {
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    fn day(&self) -> NaiveDate {
        chrono::DateTime::from_timestamp_millis(self.timestamp_ms)
            .expect("tick timestamp in chrono range")
            .date_naive()
    }
}

/// Parse outcome: surviving ticks plus every rejected row with its reason.
#[derive(Debug, Clone)]
pub struct TickParse {
    pub ticks: Vec<QuoteTick>,
    /// (1-based line number, reason) per malformed row.
    pub skipped: Vec<(usize, String)>,
}

fn parse_row(line: &str, pairs: &PairMap) -> std::result::Result<QuoteTick, String> {
    let mut fields = line.split(',');
    let (Some(sym), Some(ts), Some(bid), Some(ask), None) = (
        fields.next(),
        fields.next(),
        fields.next(),
        fields.next(),
        fields.next(),
    ) else {
        return Err("expected 4 comma-separated fields".into());
    };
    let pair = pairs
        .index_of(sym.trim())
        .ok_or_else(|| format!("unknown pair symbol {:?}", sym.trim()))?;
    let stamp = NaiveDateTime::parse_from_str(ts.trim(), TIMESTAMP_FORMAT)
        .map_err(|e| format!("bad timestamp {:?}: {e}", ts.trim()))?;
    let timestamp_ms = stamp.and_utc().timestamp_millis();
    let bid: f64 = bid.trim().parse().map_err(|_| format!("bad bid {:?}", bid.trim()))?;
    let ask: f64 = ask.trim().parse().map_err(|_| format!("bad ask {:?}", ask.trim()))?;
    if !(bid > 0.0 && bid.is_finite()) {
        return Err(format!("bid must be positive, got {bid}"));
    }
    if !(ask > 0.0 && ask.is_finite()) {
        return Err(format!("ask must be positive, got {ask}"));
    }
    Ok(QuoteTick { pair, timestamp_ms, bid, ask })
}

/// Reads a `pair,timestamp,bid,ask` CSV. Malformed rows are collected, not
/// silently dropped; more than `error_budget` of them fails the whole file.
/// A leading header row is recognized and skipped.
pub fn parse_ticks(
    path: impl AsRef<Path>,
    pairs: &PairMap,
    error_budget: usize,
) -> Result<TickParse> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut ticks = Vec::new();
    let mut skipped = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if k == 0 && line.eq_ignore_ascii_case("pair,timestamp,bid,ask") {
            continue;
        }
        match parse_row(line, pairs) {
            Ok(tick) => ticks.push(tick),
            Err(reason) => {
                skipped.push((k + 1, reason));
                if skipped.len() > error_budget {
                    let (line, msg) = skipped.last().cloned().expect("just pushed");
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        line,
                        msg: format!(
                            "error budget of {error_budget} malformed rows exceeded: {msg}"
                        ),
                    });
                }
            }
        }
    }
    Ok(TickParse { ticks, skipped })
}

/// Mid-prices of one pair sampled on a day's regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceGrid {
    pub pair: usize,
    pub day: NaiveDate,
    /// One slot per grid point starting at 00:00:00.000 UTC; `None` before
    /// the pair's first tick of the day.
    pub mids: Vec<Option<f64>>,
}

fn check_interval(interval_minutes: u32) -> Result<i64> {
    if interval_minutes == 0 || 1440 % interval_minutes != 0 {
        return Err(Error::InvalidArgument(format!(
            "interval of {interval_minutes} minutes does not divide the day"
        )));
    }
    Ok(i64::from(interval_minutes) * MS_PER_MINUTE)
}

fn day_start_ms(day: NaiveDate) -> i64 {
    day.and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp_millis()
}

/// Samples the latest mid at each grid point (last-tick carry-forward).
///
/// Only this pair's ticks inside the day's `[00:00, 24:00)` window are used;
/// quotes never carry across a day boundary. Grid points that precede the
/// first tick stay missing.
pub fn last_tick_grid(
    ticks: &[QuoteTick],
    pair: usize,
    day: NaiveDate,
    interval_minutes: u32,
) -> Result<PriceGrid> {
    let step_ms = check_interval(interval_minutes)?;
    let n = (MS_PER_DAY / step_ms) as usize;
    let start = day_start_ms(day);
    let mut todays: Vec<&QuoteTick> = ticks
        .iter()
        .filter(|t| {
            t.pair == pair && t.timestamp_ms >= start && t.timestamp_ms < start + MS_PER_DAY
        })
        .collect();
    // stable sort: among equal timestamps the later row wins below
    todays.sort_by_key(|t| t.timestamp_ms);

    let mut mids = vec![None; n];
    let mut next = 0;
    let mut last = None;
    for (i, slot) in mids.iter_mut().enumerate() {
        let t_i = start + i as i64 * step_ms;
        while next < todays.len() && todays[next].timestamp_ms <= t_i {
            last = Some(todays[next].mid());
            next += 1;
        }
        *slot = last;
    }
    Ok(PriceGrid { pair, day, mids })
}

/// Log returns between consecutive grid points of one pair-day.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub pair: usize,
    pub day: NaiveDate,
    /// `returns[i] = ln(p_{i+1}/p_i)`; `None` when either endpoint is missing.
    pub returns: Vec<Option<f64>>,
}

impl ReturnSeries {
    pub fn valid_count(&self) -> usize {
        self.returns.iter().flatten().count()
    }
}

pub fn log_returns(grid: &PriceGrid) -> ReturnSeries {
    let returns = grid
        .mids
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some((b / a).ln()),
            _ => None,
        })
        .collect();
    ReturnSeries { pair: grid.pair, day: grid.day, returns }
}

/// What to do when a pair's returns have zero variance on the jointly
/// defined intervals (constant price, or no joint intervals at all).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroVariancePolicy {
    /// Fail the day (default).
    #[default]
    Error,
    /// Store 0 for the affected entries and record them.
    ZeroAndFlag,
}

/// A day's correlation matrix plus the data-quality notes gathered while
/// estimating it.
#[derive(Debug, Clone)]
pub struct CorrelationBuild {
    pub matrix: CorrelationMatrix,
    /// Pairs whose defined-return count fell below the configured minimum.
    pub low_coverage: Vec<usize>,
    /// Entries set to 0 under [`ZeroVariancePolicy::ZeroAndFlag`].
    pub zeroed: Vec<(usize, usize)>,
    /// Defined returns per pair.
    pub valid_counts: Vec<usize>,
}

/// Realized correlation over jointly-defined intervals:
/// `rho[I][J] = sum(r_I r_J) / sqrt(sum(r_I^2) sum(r_J^2))`, all three sums
/// restricted to intervals where both series are defined. The diagonal is 0.
pub fn realized_correlation(
    series: &[ReturnSeries],
    label: &str,
    min_valid_intervals: usize,
    policy: ZeroVariancePolicy,
) -> Result<CorrelationBuild> {
    let dim = series.len();
    if dim < 2 {
        return Err(Error::InsufficientData(format!(
            "realized correlation needs at least 2 pairs, got {dim}"
        )));
    }
    let len = series[0].returns.len();
    for s in series {
        if s.returns.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: s.returns.len() });
        }
    }

    let valid_counts: Vec<usize> = series.iter().map(ReturnSeries::valid_count).collect();
    let low_coverage: Vec<usize> =
        (0..dim).filter(|&p| valid_counts[p] < min_valid_intervals).collect();

    let mut upper = Vec::with_capacity(dim * (dim - 1) / 2);
    let mut zeroed = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            let mut sxy = 0.0;
            let mut sxx = 0.0;
            let mut syy = 0.0;
            for (ri, rj) in series[i].returns.iter().zip(&series[j].returns) {
                if let (Some(a), Some(b)) = (ri, rj) {
                    sxy += a * b;
                    sxx += a * a;
                    syy += b * b;
                }
            }
            if sxx == 0.0 || syy == 0.0 {
                match policy {
                    ZeroVariancePolicy::Error => {
                        return Err(Error::ZeroVariance(if sxx == 0.0 { i } else { j }));
                    }
                    ZeroVariancePolicy::ZeroAndFlag => {
                        zeroed.push((i, j));
                        upper.push(0.0);
                        continue;
                    }
                }
            }
            let rho = sxy / (sxx * syy).sqrt();
            // Cauchy-Schwarz bounds the exact value; tolerate only roundoff
            debug_assert!(rho.abs() <= 1.0 + 1e-12);
            upper.push(rho.clamp(-1.0, 1.0));
        }
    }
    let matrix = CorrelationMatrix::from_upper(dim, &upper, label)?;
    Ok(CorrelationBuild { matrix, low_coverage, zeroed, valid_counts })
}

/// Trading-calendar exclusions and the sampling interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalendarConfig {
    pub excluded: BTreeSet<NaiveDate>,
    pub interval_minutes: u32,
}

impl Default for CalendarConfig {
    fn default() -> Self {
        Self { excluded: BTreeSet::new(), interval_minutes: DEFAULT_INTERVAL_MINUTES }
    }
}

impl CalendarConfig {
    pub fn is_excluded(&self, day: NaiveDate) -> bool {
        self.excluded.contains(&day)
    }
}

#[derive(Deserialize)]
struct RawCalendar {
    #[serde(default)]
    excluded_dates: Vec<String>,
    interval_minutes: Option<u32>,
}

/// Loads a JSON object `{"excluded_dates": ["2020-12-25", ...],
/// "interval_minutes": 5}`; both keys optional.
pub fn load_calendar(path: impl AsRef<Path>) -> Result<CalendarConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let raw: RawCalendar = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut excluded = BTreeSet::new();
    for s in &raw.excluded_dates {
        let day = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| Error::Format {
            path: path.display().to_string(),
            msg: format!("bad ISO date {s:?}: {e}"),
        })?;
        excluded.insert(day);
    }
    let interval_minutes = raw.interval_minutes.unwrap_or(DEFAULT_INTERVAL_MINUTES);
    check_interval(interval_minutes)?;
    Ok(CalendarConfig { excluded, interval_minutes })
}

/// Knobs for the end-to-end build that are not calendar content.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Pairs with fewer defined returns than this are flagged per day.
    pub min_valid_intervals: usize,
    pub zero_variance_policy: ZeroVariancePolicy,
    /// Malformed-row tolerance per tick file.
    pub error_budget: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            min_valid_intervals: 1,
            zero_variance_policy: ZeroVariancePolicy::Error,
            error_budget: 0,
        }
    }
}

/// Everything the end-to-end build wants to tell the caller besides the
/// ensemble itself.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub ensemble: Ensemble,
    /// Days dropped by the calendar (only those that had data).
    pub excluded_days: Vec<NaiveDate>,
    /// Days inside the data's span with no ticks at all, e.g. weekends.
    pub empty_days: Vec<NaiveDate>,
    /// Total malformed rows across all files.
    pub malformed_rows: usize,
    /// (day label, pair) with fewer defined returns than the minimum.
    pub low_coverage: Vec<(String, usize)>,
    /// (day label, i, j) entries zeroed under the zero-and-flag policy.
    pub zeroed_entries: Vec<(String, usize, usize)>,
}

/// Runs the whole pipeline: parse every file, bucket ticks into UTC days,
/// sample grids, take returns, and build one labeled correlation matrix per
/// included day in the data's date span.
pub fn build_daily_ensemble(
    paths: &[impl AsRef<Path>],
    pairs: &PairMap,
    calendar: &CalendarConfig,
    options: &IngestOptions,
) -> Result<IngestReport> {
    let mut ticks = Vec::new();
    let mut malformed_rows = 0;
    for path in paths {
        let parsed = parse_ticks(path, pairs, options.error_budget)?;
        malformed_rows += parsed.skipped.len();
        ticks.extend(parsed.ticks);
    }

    let mut by_day: BTreeMap<NaiveDate, Vec<QuoteTick>> = BTreeMap::new();
    for t in ticks {
        by_day.entry(t.day()).or_default().push(t);
    }

    let mut matrices = Vec::new();
    let mut excluded_days = Vec::new();
    let mut empty_days = Vec::new();
    let mut low_coverage = Vec::new();
    let mut zeroed_entries = Vec::new();
    if let (Some(&first), Some(&last)) = (by_day.keys().next(), by_day.keys().last()) {
        let mut day = first;
        while day <= last {
            if calendar.is_excluded(day) {
                if by_day.contains_key(&day) {
                    excluded_days.push(day);
                }
            } else if let Some(bucket) = by_day.get(&day) {
                let label = day.format("%Y-%m-%d").to_string();
                let series: Vec<ReturnSeries> = (0..pairs.len())
                    .map(|p| {
                        last_tick_grid(bucket, p, day, calendar.interval_minutes)
                            .map(|g| log_returns(&g))
                    })
                    .collect::<Result<_>>()?;
                let build = realized_correlation(
                    &series,
                    &label,
                    options.min_valid_intervals,
                    options.zero_variance_policy,
                )?;
                low_coverage.extend(build.low_coverage.iter().map(|&p| (label.clone(), p)));
                zeroed_entries
                    .extend(build.zeroed.iter().map(|&(i, j)| (label.clone(), i, j)));
                matrices.push(build.matrix);
            } else {
                empty_days.push(day);
            }
            day = day.succ_opt().expect("date range stays in chrono bounds");
        }
    }

    let ensemble = Ensemble::new(pairs.len(), matrices)?;
    Ok(IngestReport {
        ensemble,
        excluded_days,
        empty_days,
        malformed_rows,
        low_coverage,
        zeroed_entries,
    })
}
