//! Pairwise day-similarity rankings and their rank-correlation validation.
//!
//! Two rival distances are computed for every unordered pair of days: the
//! Mahalanobis distance between the days' observable vectors (covariance
//! fitted on the whole ensemble) and the plain Euclidean distance between
//! the raw matrices. Agreement between the two rankings is summarized by a
//! Spearman rank correlation with a one-sided p-value for positive
//! association.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::observables::{self, ObservableId};

use super::distance::{zscore_columns, Whitener};

/// Largest list length for which the permutation p-value is enumerated
/// exactly (8! = 40,320 permutations).
const EXACT_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PValueMethod {
    /// Exact enumeration of all rank permutations.
    Exact,
    /// Student-t approximation `t = rho sqrt((n-2)/(1-rho^2))`.
    TApprox,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityReport {
    pub pair_count: usize,
    /// Day-label pairs, sorted by observable-space distance, most similar
    /// first.
    pub pair_labels: Vec<(String, String)>,
    /// Mahalanobis distances between observable vectors, aligned with
    /// `pair_labels`.
    pub observable_distances: Vec<f64>,
    /// Euclidean (Frobenius) distances between the raw matrices.
    pub matrix_distances: Vec<f64>,
    /// Spearman rank correlation between the two distance lists.
    pub spearman: f64,
    /// One-sided p-value for positive association.
    pub p_value: f64,
    pub p_method: PValueMethod,
    /// Ridge used by the observable-space covariance (0 if none).
    pub ridge: f64,
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let shared = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(
            "spearman needs at least two observations".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "spearman inputs must be finite".into(),
        ));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry).ok_or_else(|| {
        Error::InsufficientData("a distance list is constant, ranks carry no order".into())
    })
}

/// One-sided p-value for positive rank association. Exact permutation
/// enumeration for short lists, Student-t approximation otherwise.
fn p_value_positive(rx: &[f64], ry: &[f64], rho: f64) -> (f64, PValueMethod) {
    let n = rx.len();
    if n <= EXACT_LIMIT {
        let mut at_least = 0u64;
        let mut total = 0u64;
        // Heap's algorithm over permutations of one rank list, counting
        // those whose correlation reaches the observed value
        let mut counts = vec![0usize; n];
        let mut scratch = ry.to_vec();
        let tally = |scratch: &[f64], at_least: &mut u64, total: &mut u64| {
            if let Some(r) = pearson(rx, scratch) {
                if r >= rho - 1e-12 {
                    *at_least += 1;
                }
            }
            *total += 1;
        };
        tally(&scratch, &mut at_least, &mut total);
        let mut i = 0;
        while i < n {
            if counts[i] < i {
                let j = if i % 2 == 0 { 0 } else { counts[i] };
                scratch.swap(j, i);
                tally(&scratch, &mut at_least, &mut total);
                counts[i] += 1;
                i = 0;
            } else {
                counts[i] = 0;
                i += 1;
            }
        }
        (at_least as f64 / total as f64, PValueMethod::Exact)
    } else {
        let p = if rho >= 1.0 {
            0.0
        } else if rho <= -1.0 {
            1.0
        } else {
            let df = (n - 2) as f64;
            let t = rho * (df / (1.0 - rho * rho)).sqrt();
            let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
            1.0 - dist.cdf(t)
        };
        (p, PValueMethod::TApprox)
    }
}

/// Ranks all day pairs under the observable-space Mahalanobis distance and
/// the raw-matrix Euclidean distance, and validates their agreement.
pub fn similarity_study(
    ensemble: &Ensemble,
    selection: &[ObservableId],
) -> Result<SimilarityReport> {
    let n = ensemble.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "similarity study needs at least 3 days, got {n}"
        )));
    }
    if selection.is_empty() {
        return Err(Error::InvalidArgument(
            "observable selection is empty".into(),
        ));
    }

    let raw: Vec<Vec<f64>> = ensemble
        .matrices()
        .iter()
        .map(|m| selection.iter().map(|&id| observables::evaluate(m, id)).collect())
        .collect();
    // z-scores first: pair distances are identical at ridge zero, and the
    // covariance conditioning no longer depends on the observables' scales
    let (vectors, _) = zscore_columns(&raw)?;
    let whitener = Whitener::fit(&vectors)?;
    let whitened: Vec<_> = vectors.iter().map(|v| whitener.whiten(v)).collect();

    let matrices = ensemble.matrices();
    let mut pair_labels = Vec::with_capacity(n * (n - 1) / 2);
    let mut obs_dist = Vec::with_capacity(n * (n - 1) / 2);
    let mut mat_dist = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pair_labels.push((
                matrices[i].label().to_string(),
                matrices[j].label().to_string(),
            ));
            obs_dist.push((&whitened[i] - &whitened[j]).norm());
            let frob = matrices[i]
                .as_slice()
                .iter()
                .zip(matrices[j].as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            mat_dist.push(frob);
        }
    }

    let rho = spearman(&obs_dist, &mat_dist)?;
    let (p_value, p_method) =
        p_value_positive(&average_ranks(&obs_dist), &average_ranks(&mat_dist), rho);

    // most similar pairs first
    let mut order: Vec<usize> = (0..obs_dist.len()).collect();
    order.sort_by(|&a, &b| obs_dist[a].total_cmp(&obs_dist[b]));
    let pair_labels: Vec<_> = order.iter().map(|&k| pair_labels[k].clone()).collect();
    let matrix_distances: Vec<f64> = order.iter().map(|&k| mat_dist[k]).collect();
    let observable_distances: Vec<f64> = order.iter().map(|&k| obs_dist[k]).collect();

    Ok(SimilarityReport {
        pair_count: observable_distances.len(),
        pair_labels,
        observable_distances,
        matrix_distances,
        spearman: rho,
        p_value,
        p_method,
        ridge: whitener.ridge,
    })
}
