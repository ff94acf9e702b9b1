//! Two-sigma band calibration: capture rates and balanced accuracy.

use serde::Serialize;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::moments::{expectation, theoretical_sigma, ModelParams, SigmaMethod};
use crate::observables::{evaluate, graph, ObservableId};

/// Which band to test day values against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaptureMode<'a> {
    /// Band centered on the ensemble mean with the sample standard deviation.
    Empirical,
    /// Band centered on the model expectation with the model sigma.
    Theoretical(&'a ModelParams),
}

/// Fraction of days inside the band; `zero_sigma` marks a degenerate band of
/// zero width (the rate is still exact: a zero-width band contains exactly
/// the days equal to its center).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaptureRate {
    pub rate: f64,
    pub zero_sigma: bool,
}

/// Proportion of days whose observable value lies within `k_sigma` standard
/// deviations of the band center.
pub fn day_capture(
    ensemble: &Ensemble,
    id: ObservableId,
    mode: CaptureMode<'_>,
    k_sigma: f64,
) -> Result<CaptureRate> {
    if !(k_sigma > 0.0) || !k_sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "k_sigma must be positive and finite, got {k_sigma}"
        )));
    }
    if ensemble.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    let values: Vec<f64> = ensemble.iter().map(|m| evaluate(m, id)).collect();
    let (center, sigma) = match mode {
        CaptureMode::Empirical => {
            if values.len() < 2 {
                return Err(Error::InsufficientData(
                    "empirical band needs at least 2 days".into(),
                ));
            }
            empirical_band(&values)
        }
        CaptureMode::Theoretical(params) => {
            let dim = ensemble.dim();
            let center = expectation(graph(id), params, dim)?;
            let sigma = theoretical_sigma(graph(id), params, dim, SigmaMethod::default())?;
            (center, sigma)
        }
    };
    Ok(capture_against(&values, center, sigma, k_sigma))
}

pub(crate) fn empirical_band(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn capture_against(values: &[f64], center: f64, sigma: f64, k: f64) -> CaptureRate {
    let inside = values
        .iter()
        .filter(|&&v| (v - center).abs() <= k * sigma)
        .count();
    CaptureRate {
        rate: inside as f64 / values.len() as f64,
        zero_sigma: sigma == 0.0,
    }
}

/// Confusion-style band comparison for one observable.
///
/// Ground truth: a day is typical when it lies inside the empirical 2-sigma
/// band. Prediction: inside the theoretical 2-sigma band. `tnr` (and hence
/// `balanced_accuracy`) is `None` when the ensemble has no atypical days to
/// measure it on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationRow {
    pub id: ObservableId,
    pub empirical_capture: f64,
    pub theoretical_capture: f64,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub balanced_accuracy: Option<f64>,
}

/// Balanced accuracy of the model band as a predictor of the empirical band,
/// both at 2 sigma.
pub fn balanced_accuracy(
    ensemble: &Ensemble,
    id: ObservableId,
    params: &ModelParams,
) -> Result<ClassificationRow> {
    const K: f64 = 2.0;
    if ensemble.len() < 2 {
        return Err(Error::InsufficientData(
            "balanced accuracy needs at least 2 days".into(),
        ));
    }
    let dim = ensemble.dim();
    let values: Vec<f64> = ensemble.iter().map(|m| evaluate(m, id)).collect();
    let (e_center, e_sigma) = empirical_band(&values);
    let t_center = expectation(graph(id), params, dim)?;
    let t_sigma = theoretical_sigma(graph(id), params, dim, SigmaMethod::default())?;

    let (mut tp, mut fn_, mut fp, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for &v in &values {
        let typical = (v - e_center).abs() <= K * e_sigma;
        let predicted = (v - t_center).abs() <= K * t_sigma;
        match (typical, predicted) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let n = values.len() as f64;
    let ratio = |num: usize, den: usize| {
        (den > 0).then(|| num as f64 / den as f64)
    };
    let tpr = ratio(tp, tp + fn_);
    let tnr = ratio(tn, tn + fp);
    let balanced = match (tpr, tnr) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        _ => None,
    };
    Ok(ClassificationRow {
        id,
        empirical_capture: (tp + fn_) as f64 / n,
        theoretical_capture: (tp + fp) as f64 / n,
        tpr,
        tnr,
        balanced_accuracy: balanced,
    })
}
