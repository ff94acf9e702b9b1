//! Event-enrichment study: rank days by outlier distance and test whether
//! flagged event days concentrate among the most distant ones.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::observables::{self, ObservableId};

use super::distance::{euclidean_standardized, mahalanobis, pca_reduce, zscore_columns};

/// Which per-day vector feeds the distance computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FeatureSet {
    /// Values of the selected invariant observables.
    Observables(Vec<ObservableId>),
    /// The D(D-1)/2 upper-triangle correlation entries.
    RawCorrelations,
    /// Principal components of the raw correlations, keeping the smallest
    /// count whose cumulative explained variance reaches the threshold.
    Pca { variance_threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistanceMetric {
    Mahalanobis,
    EuclideanStandardized,
}

/// Enrichment numbers for one subset size.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetRow {
    pub size: usize,
    /// Event days among the `size` most distant days.
    pub top_events: usize,
    /// Event days among the `size` least distant days.
    pub bottom_events: usize,
    pub p_top: f64,
    pub p_bottom: f64,
    pub odds_ratio: f64,
    /// One-sided Fisher exact p for the top/bottom 2x2 table.
    pub fisher_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnomalyReport {
    pub metric: DistanceMetric,
    /// Width of the feature vectors the metric actually saw.
    pub feature_count: usize,
    /// Ridge the Mahalanobis covariance needed (0 when well-conditioned
    /// or when the metric does not invert a covariance).
    pub ridge: f64,
    /// Zero-variance feature columns dropped before the distance.
    pub dropped_features: Vec<usize>,
    /// Day labels sorted by distance, most distant first.
    pub ranked_labels: Vec<String>,
    /// Distances aligned with `ranked_labels`.
    pub distances: Vec<f64>,
    pub event_count: usize,
    pub rows: Vec<SubsetRow>,
}

/// Odds ratio `(p_t/(1-p_t)) / (p_b/(1-p_b))`, with the equal-proportion
/// case pinned to exactly 1 (covers 0/0 at p=0 or p=1).
pub fn odds_ratio(p_top: f64, p_bottom: f64) -> f64 {
    if p_top == p_bottom {
        return 1.0;
    }
    (p_top * (1.0 - p_bottom)) / (p_bottom * (1.0 - p_top))
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// One-sided Fisher exact p-value: probability of at least `table[0][0]`
/// events in the first row, under the hypergeometric law with the table's
/// margins fixed.
pub fn fisher_exact_one_sided(table: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = table;
    let total = a + b + c + d;
    let events = a + c;
    let row = a + b;
    let ln_denom = ln_binomial(total, row);
    let hi = row.min(events);
    let lo = row.saturating_sub(total - events);
    debug_assert!(a >= lo && a <= hi);
    let mut p = 0.0;
    for k in a..=hi {
        p += (ln_binomial(events, k) + ln_binomial(total - events, row - k) - ln_denom).exp();
    }
    p.min(1.0)
}

fn binomial_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

/// Exact-rational reference for the one-sided Fisher test, computed by
/// enumerating every table with the given margins. Deliberately shares no
/// arithmetic with [`fisher_exact_one_sided`].
pub fn fisher_exact_oracle(table: [[u64; 2]; 2]) -> BigRational {
    let [[a, b], [c, d]] = table;
    let total = a + b + c + d;
    let events = a + c;
    let row = a + b;
    let lo = row.saturating_sub(total - events);
    let hi = row.min(events);
    let mut tail = BigInt::zero();
    let mut all = BigInt::zero();
    for k in lo..=hi {
        let weight = binomial_big(events, k) * binomial_big(total - events, row - k);
        if k >= a {
            tail += &weight;
        }
        all += weight;
    }
    BigRational::new(tail, all)
}

/// Per-day feature vectors plus the original indices of any columns dropped
/// while building them.
fn feature_matrix(
    ensemble: &Ensemble,
    features: &FeatureSet,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    match features {
        FeatureSet::Observables(ids) => {
            if ids.is_empty() {
                return Err(Error::InvalidArgument(
                    "observable feature set is empty".into(),
                ));
            }
            let raw: Vec<Vec<f64>> = ensemble
                .matrices()
                .iter()
                .map(|m| ids.iter().map(|&id| observables::evaluate(m, id)).collect())
                .collect();
            // observables span wildly different scales; the metric sees
            // their z-scores
            zscore_columns(&raw)
        }
        FeatureSet::RawCorrelations => {
            Ok((ensemble.matrices().iter().map(|m| m.upper()).collect(), Vec::new()))
        }
        FeatureSet::Pca { variance_threshold } => {
            let raw: Vec<Vec<f64>> =
                ensemble.matrices().iter().map(|m| m.upper()).collect();
            let reduction = pca_reduce(&raw, *variance_threshold)?;
            Ok((reduction.reduced, reduction.dropped))
        }
    }
}

/// Ranks every day by its distance under the chosen feature set and metric,
/// then compares event prevalence between the most and least distant
/// `size` days for each requested subset size.
pub fn anomaly_study(
    ensemble: &Ensemble,
    features: &FeatureSet,
    metric: DistanceMetric,
    event_labels: &[String],
    subset_sizes: &[usize],
) -> Result<AnomalyReport> {
    let n = ensemble.len();
    let known: HashSet<&str> = ensemble.labels().collect();
    for label in event_labels {
        if !known.contains(label.as_str()) {
            return Err(Error::MissingLabel(label.clone()));
        }
    }
    let events: HashSet<&str> = event_labels.iter().map(String::as_str).collect();
    for &s in subset_sizes {
        if s == 0 || 2 * s > n {
            return Err(Error::InvalidArgument(format!(
                "subset size {s} must be in 1..={} for {n} days",
                n / 2
            )));
        }
    }

    let (vectors, mut dropped) = feature_matrix(ensemble, features)?;
    let feature_count = vectors.first().map_or(0, Vec::len);
    let (distances, ridge) = match metric {
        DistanceMetric::Mahalanobis => {
            let r = mahalanobis(&vectors)?;
            (r.distances, r.ridge)
        }
        DistanceMetric::EuclideanStandardized => {
            let r = euclidean_standardized(&vectors)?;
            // at most one stage drops columns: standardized observable and
            // PCA features always carry positive variance, and the raw
            // feature set drops nothing upstream
            dropped.extend(r.dropped);
            (r.distances, 0.0)
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| distances[j].total_cmp(&distances[i]));
    let labels: Vec<&str> = ensemble.labels().collect();
    let ranked_labels: Vec<String> =
        order.iter().map(|&i| labels[i].to_string()).collect();
    let ranked_distances: Vec<f64> = order.iter().map(|&i| distances[i]).collect();

    let is_event: Vec<bool> =
        order.iter().map(|&i| events.contains(labels[i])).collect();
    let rows = subset_sizes
        .iter()
        .map(|&s| {
            let top = is_event[..s].iter().filter(|&&e| e).count();
            let bottom = is_event[n - s..].iter().filter(|&&e| e).count();
            let p_top = top as f64 / s as f64;
            let p_bottom = bottom as f64 / s as f64;
            let table = [
                [top as u64, (s - top) as u64],
                [bottom as u64, (s - bottom) as u64],
            ];
            SubsetRow {
                size: s,
                top_events: top,
                bottom_events: bottom,
                p_top,
                p_bottom,
                odds_ratio: odds_ratio(p_top, p_bottom),
                fisher_p: fisher_exact_one_sided(table),
            }
        })
        .collect();

    Ok(AnomalyReport {
        metric,
        feature_count,
        ridge,
        dropped_features: dropped,
        ranked_labels,
        distances: ranked_distances,
        event_count: events.len(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::CorrelationMatrix;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_traits::ToPrimitive;

    #[test]
    fn tail_matches_exact_oracle() {
        for s in 1..=12u64 {
            for a in 0..=s {
                for c in 0..=s {
                    let table = [[a, s - a], [c, s - c]];
                    let fast = fisher_exact_one_sided(table);
                    let exact = fisher_exact_oracle(table).to_f64().unwrap();
                    assert_abs_diff_eq!(fast, exact, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn benchmark_enrichment_row() {
        // 11 of 25 event days in the far group, 4 of 25 in the near group
        let p = fisher_exact_one_sided([[11, 14], [4, 21]]);
        assert_relative_eq!(p, 0.031_109_238_359_935_31, max_relative = 1e-10);
        assert_relative_eq!(odds_ratio(0.44, 0.16), 4.125, max_relative = 1e-12);
    }

    #[test]
    fn empty_cell_table() {
        let p = fisher_exact_one_sided([[5, 20], [0, 25]]);
        let exact = fisher_exact_oracle([[5, 20], [0, 25]]);
        assert_eq!(
            exact,
            BigRational::new(BigInt::from(33), BigInt::from(1316))
        );
        assert_abs_diff_eq!(p, 33.0 / 1316.0, epsilon = 1e-12);
    }

    #[test]
    fn odds_ratio_swap_is_reciprocal() {
        let cases = [(0.44, 0.16), (0.9, 0.3), (0.5, 0.25)];
        for (pt, pb) in cases {
            let or = odds_ratio(pt, pb);
            let swapped = odds_ratio(1.0 - pt, 1.0 - pb);
            assert_relative_eq!(swapped, 1.0 / or, max_relative = 1e-12);
        }
        assert_eq!(odds_ratio(0.3, 0.3), 1.0);
        assert_eq!(odds_ratio(0.0, 0.0), 1.0);
        assert_eq!(odds_ratio(1.0, 1.0), 1.0);
        assert!(odds_ratio(0.5, 0.0).is_infinite());
        assert_eq!(odds_ratio(0.0, 0.5), 0.0);
    }

    fn toy_ensemble() -> (Ensemble, Vec<String>) {
        // 12 days of D=4 matrices; three "event" days get much larger
        // off-diagonal structure than the rest
        let mut matrices = Vec::new();
        for k in 0..12usize {
            let loud = [0, 4, 8].contains(&k);
            let base = if loud { 0.8 } else { 0.05 };
            let wobble = 0.01 * (k as f64 + 1.0).sin();
            let upper: Vec<f64> = (0..6)
                .map(|e| base + wobble * ((e + k) as f64).cos())
                .collect();
            matrices
                .push(CorrelationMatrix::from_upper(4, &upper, format!("day-{k:02}")).unwrap());
        }
        let events: Vec<String> =
            [0, 4, 8].iter().map(|k| format!("day-{k:02}")).collect();
        (Ensemble::new(4, matrices).unwrap(), events)
    }

    #[test]
    fn loud_days_rank_first_under_both_metrics() {
        let (ensemble, events) = toy_ensemble();
        for metric in [DistanceMetric::Mahalanobis, DistanceMetric::EuclideanStandardized] {
            let report = anomaly_study(
                &ensemble,
                &FeatureSet::RawCorrelations,
                metric,
                &events,
                &[3],
            )
            .unwrap();
            let row = &report.rows[0];
            assert_eq!(row.top_events, 3);
            assert_eq!(row.bottom_events, 0);
            assert_eq!(row.p_top, 1.0);
            assert!(row.odds_ratio.is_infinite());
            assert!(row.fisher_p < 0.06);
            for label in &report.ranked_labels[..3] {
                assert!(events.contains(label));
            }
        }
    }

    #[test]
    fn observable_and_pca_features_agree_on_the_outliers() {
        let (ensemble, events) = toy_ensemble();
        let by_obs = anomaly_study(
            &ensemble,
            &FeatureSet::Observables(vec![
                ObservableId::LIN,
                ObservableId::Q1,
                ObservableId::Q2,
            ]),
            DistanceMetric::EuclideanStandardized,
            &events,
            &[3],
        )
        .unwrap();
        let by_pca = anomaly_study(
            &ensemble,
            &FeatureSet::Pca { variance_threshold: 0.70 },
            DistanceMetric::EuclideanStandardized,
            &events,
            &[3],
        )
        .unwrap();
        assert_eq!(by_obs.rows[0].top_events, 3);
        assert_eq!(by_pca.rows[0].top_events, 3);
        assert_eq!(by_obs.feature_count, 3);
        assert!(by_pca.feature_count < 6);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let (ensemble, _) = toy_ensemble();
        let err = anomaly_study(
            &ensemble,
            &FeatureSet::RawCorrelations,
            DistanceMetric::Mahalanobis,
            &["no-such-day".to_string()],
            &[3],
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingLabel(_)));

        let err = anomaly_study(
            &ensemble,
            &FeatureSet::RawCorrelations,
            DistanceMetric::Mahalanobis,
            &[],
            &[7],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }
}
