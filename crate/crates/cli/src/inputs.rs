//! Shared input handling: observable selections, event-date files and
//! previously fitted couplings.

use std::path::Path;

use anyhow::Context;
use pigm_core::analysis::{deviation_report, fit};
use pigm_core::observables::FX_BENCHMARK_12;
use pigm_core::{Ensemble, ModelParams, ObservableId};

use crate::CliError;

/// Observable selection as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// The full 35-observable catalog.
    All,
    /// The 12-observable benchmark preset used in the original FX study.
    Fx12,
    /// The `n` cubic/quartic observables deviating most from the fitted
    /// model, in units of the empirical standard deviation.
    LeastGaussian(usize),
    /// An explicit id list.
    Ids(Vec<ObservableId>),
}

impl Selection {
    /// Accepts `all`, `fx12`, `least-gaussian`, `least-gaussian:N` or a
    /// comma-separated id list such as `O3,O5,Q1`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("all") {
            return Ok(Selection::All);
        }
        if t.eq_ignore_ascii_case("fx12") {
            return Ok(Selection::Fx12);
        }
        if let Some(rest) = t
            .strip_prefix("least-gaussian")
            .or_else(|| t.strip_prefix("least_gaussian"))
        {
            let n = match rest.strip_prefix(':') {
                None if rest.is_empty() => 12,
                Some(n) => n.parse::<usize>().map_err(|_| {
                    CliError::usage(format!("bad least-gaussian count {n:?}"))
                })?,
                None => {
                    return Err(CliError::usage(format!("unknown selection {t:?}")));
                }
            };
            if n == 0 || n > 31 {
                return Err(CliError::usage(format!(
                    "least-gaussian count must be 1..=31, got {n}"
                )));
            }
            return Ok(Selection::LeastGaussian(n));
        }
        let ids = t
            .split(',')
            .map(|s| {
                s.parse::<ObservableId>()
                    .map_err(|_| CliError::usage(format!("unknown observable id {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if ids.is_empty() {
            return Err(CliError::usage("empty observable selection"));
        }
        Ok(Selection::Ids(ids))
    }

    /// Resolves to concrete ids. `least-gaussian` needs couplings: the given
    /// ones, or a fresh fit of `ensemble` when none are supplied. `seed`
    /// drives only the bootstrap inside the deviation ranking.
    pub fn resolve(
        &self,
        ensemble: &Ensemble,
        params: Option<&ModelParams>,
        seed: u64,
    ) -> Result<Vec<ObservableId>, CliError> {
        match self {
            Selection::All => Ok(ObservableId::ALL.to_vec()),
            Selection::Fx12 => Ok(FX_BENCHMARK_12.to_vec()),
            Selection::Ids(ids) => Ok(ids.clone()),
            Selection::LeastGaussian(n) => {
                let fitted;
                let params = match params {
                    Some(p) => p,
                    None => {
                        let report = fit(ensemble)?;
                        fitted = report.params.ok_or_else(|| {
                            CliError::Data(anyhow::anyhow!(
                                "least-gaussian ranking needs a usable fit; \
                                 solved couplings violate positivity: {:?}",
                                report.violations
                            ))
                        })?;
                        &fitted
                    }
                };
                let report = deviation_report(ensemble, params, seed)?;
                let mut rows = report.rows;
                // stable sort: catalog order breaks delta ties
                rows.sort_by(|a, b| b.delta.total_cmp(&a.delta));
                Ok(rows.iter().take(*n).map(|r| r.id).collect())
            }
        }
    }
}

/// Reads an event-date file: a JSON array of date strings, a JSON object
/// with a `dates` array, or plain text with one date per line (an optional
/// `date` header and `#` comments are skipped). Dates are matched against
/// ensemble day labels as strings.
pub fn read_event_dates(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading event file {}", path.display()))?;
    let trimmed = text.trim_start();
    let dates: Vec<String> = if trimmed.starts_with('[') {
        serde_json::from_str(&text)
            .with_context(|| format!("parsing event JSON {}", path.display()))?
    } else if trimmed.starts_with('{') {
        #[derive(serde::Deserialize)]
        struct Wrapper {
            dates: Vec<String>,
        }
        let w: Wrapper = serde_json::from_str(&text)
            .with_context(|| format!("parsing event JSON {}", path.display()))?;
        w.dates
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter(|l| !l.eq_ignore_ascii_case("date"))
            .map(str::to_owned)
            .collect()
    };
    if dates.is_empty() {
        return Err(CliError::Data(anyhow::anyhow!(
            "event file {} contains no dates",
            path.display()
        )));
    }
    Ok(dates)
}

/// Loads couplings from a `fit` artifact (with or without the `meta`
/// envelope) or from a bare params JSON; also returns the matrix dimension
/// when the file records one.
pub fn load_params(path: &Path) -> Result<(ModelParams, Option<usize>), CliError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading params file {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing params file {}", path.display()))?;
    let body = value.get("fit").unwrap_or(&value);
    if let Some(inner) = body.get("params") {
        let dim = body.get("dim").and_then(|d| d.as_u64()).map(|d| d as usize);
        if inner.is_null() {
            let violations = body
                .get("violations")
                .map(ToString::to_string)
                .unwrap_or_default();
            return Err(CliError::Data(anyhow::anyhow!(
                "{}: fit has no usable couplings (violations: {violations})",
                path.display()
            )));
        }
        let params: ModelParams = serde_json::from_value(inner.clone())
            .with_context(|| format!("parsing couplings in {}", path.display()))?;
        return Ok((params, dim));
    }
    let params: ModelParams = serde_json::from_value(value)
        .with_context(|| format!("parsing couplings in {}", path.display()))?;
    Ok((params, None))
}

/// Splits a comma-separated list of positive sizes.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    let sizes = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("bad subset size {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(CliError::usage("subset sizes must be positive"));
    }
    Ok(sizes)
}
