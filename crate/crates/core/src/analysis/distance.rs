//! Outlier distances on per-day feature vectors.
//!
//! All three operations share conventions: features are columns, days are
//! rows, moments use the unbiased (N-1) normalization, and any spectral work
//! happens on the symmetrized sample covariance.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Condition-number threshold beyond which a ridge is applied.
const COND_LIMIT: f64 = 1e8;
/// Relative tolerance for calling a small negative eigenvalue roundoff.
const EIG_TOL: f64 = 1e-10;

/// Mahalanobis distances of each row vector from the sample mean.
#[derive(Debug, Clone, Serialize)]
pub struct MahalanobisReport {
    pub distances: Vec<f64>,
    /// Ridge added to the covariance diagonal (0 when well-conditioned).
    pub ridge: f64,
    /// Condition number before any ridge.
    pub condition: f64,
}

fn check_rows(vectors: &[Vec<f64>], min_rows: usize) -> Result<usize> {
    if vectors.len() < min_rows {
        return Err(Error::InsufficientData(format!(
            "need at least {min_rows} vectors, got {}",
            vectors.len()
        )));
    }
    let p = vectors[0].len();
    if p == 0 {
        return Err(Error::InsufficientData("feature vectors are empty".into()));
    }
    for (k, v) in vectors.iter().enumerate() {
        if v.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: v.len() });
        }
        if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { i: k, j: bad });
        }
    }
    Ok(p)
}

fn column_means(vectors: &[Vec<f64>], p: usize) -> Vec<f64> {
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; p];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    mean
}

/// Whitening transform for the sample covariance of a set of row vectors:
/// maps x to (Sigma + eps I)^{-1/2} (x - mean), so whitened Euclidean norms
/// are Mahalanobis distances. Shared by the outlier and pairwise metrics.
pub(crate) struct Whitener {
    mean: Vec<f64>,
    eigvecs: DMatrix<f64>,
    inv_sqrt: DVector<f64>,
    pub(crate) ridge: f64,
    pub(crate) condition: f64,
}

impl Whitener {
    /// Fits mean and (N-1)-normalized covariance. The ridge `eps` is 0 when
    /// the condition number is below 1e8, otherwise the smallest power of
    /// ten that brings it below. Fails if the symmetrized covariance has a
    /// genuinely negative spectrum.
    pub(crate) fn fit(vectors: &[Vec<f64>]) -> Result<Self> {
        let p = check_rows(vectors, 2)?;
        let n = vectors.len();
        let mean = column_means(vectors, p);

        let mut cov = DMatrix::zeros(p, p);
        for v in vectors {
            let c = DVector::from_iterator(p, v.iter().zip(&mean).map(|(x, m)| x - m));
            cov += &c * c.transpose();
        }
        cov /= (n - 1) as f64;
        // numerically symmetric by construction, but make it exact
        cov = (&cov + cov.transpose()) * 0.5;

        let eigen = cov.symmetric_eigen();
        let max_eig = eigen.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let mut min_eig = f64::INFINITY;
        for &l in eigen.eigenvalues.iter() {
            if l < -EIG_TOL * max_eig.max(1.0) {
                return Err(Error::NotPositiveSemidefinite(format!(
                    "eigenvalue {l} below roundoff tolerance"
                )));
            }
            min_eig = min_eig.min(l.max(0.0));
        }
        let condition = if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY };

        let mut ridge = 0.0;
        if !(condition < COND_LIMIT) {
            // smallest power of ten restoring conditioning
            let mut k = -30;
            loop {
                ridge = 10f64.powi(k);
                if (max_eig + ridge) / (min_eig + ridge) < COND_LIMIT {
                    break;
                }
                k += 1;
            }
        }

        let inv_sqrt = DVector::from_iterator(
            p,
            eigen.eigenvalues.iter().map(|&l| 1.0 / (l.max(0.0) + ridge).sqrt()),
        );
        Ok(Whitener { mean, eigvecs: eigen.eigenvectors, inv_sqrt, ridge, condition })
    }

    pub(crate) fn whiten(&self, v: &[f64]) -> DVector<f64> {
        let c = DVector::from_iterator(
            self.mean.len(),
            v.iter().zip(&self.mean).map(|(x, m)| x - m),
        );
        (self.eigvecs.transpose() * c).component_mul(&self.inv_sqrt)
    }
}

/// Distances `sqrt((x-mu)^T (Sigma + eps I)^{-1} (x-mu))` with the sample
/// mean and (N-1)-normalized covariance of the inputs. See [`Whitener`] for
/// the ridge policy.
pub fn mahalanobis(vectors: &[Vec<f64>]) -> Result<MahalanobisReport> {
    let w = Whitener::fit(vectors)?;
    let distances = vectors.iter().map(|v| w.whiten(v).norm()).collect();
    Ok(MahalanobisReport { distances, ridge: w.ridge, condition: w.condition })
}

/// Z-scores every column (N-1 standard deviation), dropping zero-variance
/// columns; returns the standardized vectors plus the dropped indices.
///
/// Mahalanobis distances are unchanged by this map where the ridge stays
/// zero (affine invariance), but the covariance conditioning then reflects
/// actual feature redundancy instead of disparate feature scales.
pub(crate) fn zscore_columns(vectors: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let p = check_rows(vectors, 2)?;
    let n = vectors.len() as f64;
    let mean = column_means(vectors, p);
    let mut var = vec![0.0; p];
    for v in vectors {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    for s in &mut var {
        *s /= n - 1.0;
    }
    let dropped: Vec<usize> = (0..p).filter(|&j| var[j] == 0.0).collect();
    if dropped.len() == p {
        return Err(Error::InsufficientData(
            "all features have zero variance".into(),
        ));
    }
    let kept: Vec<usize> = (0..p).filter(|&j| var[j] > 0.0).collect();
    let standardized = vectors
        .iter()
        .map(|v| kept.iter().map(|&j| (v[j] - mean[j]) / var[j].sqrt()).collect())
        .collect();
    Ok((standardized, dropped))
}

/// Euclidean distances from the mean after per-feature z-scoring.
#[derive(Debug, Clone, Serialize)]
pub struct EuclideanReport {
    pub distances: Vec<f64>,
    /// Indices of zero-variance features that were dropped.
    pub dropped: Vec<usize>,
}

/// Standardized Euclidean distance from the sample mean; zero-variance
/// features carry no information and are dropped (recorded in the report).
pub fn euclidean_standardized(vectors: &[Vec<f64>]) -> Result<EuclideanReport> {
    let p = check_rows(vectors, 2)?;
    let n = vectors.len() as f64;
    let mean = column_means(vectors, p);
    let mut var = vec![0.0; p];
    for v in vectors {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    for s in &mut var {
        *s /= n - 1.0;
    }
    let dropped: Vec<usize> =
        (0..p).filter(|&j| var[j] == 0.0).collect();
    if dropped.len() == p {
        return Err(Error::InsufficientData(
            "all features have zero variance".into(),
        ));
    }
    let distances = vectors
        .iter()
        .map(|v| {
            (0..p)
                .filter(|j| var[*j] > 0.0)
                .map(|j| {
                    let z = (v[j] - mean[j]) / var[j].sqrt();
                    z * z
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(EuclideanReport { distances, dropped })
}

/// Projection onto the leading principal components of the z-scored features.
#[derive(Debug, Clone, Serialize)]
pub struct PcaReduction {
    /// Day vectors in component coordinates (length `components` each).
    pub reduced: Vec<Vec<f64>>,
    /// Number of components kept.
    pub components: usize,
    /// Explained-variance ratios of all components, descending.
    pub explained: Vec<f64>,
    /// Zero-variance features dropped before the decomposition.
    pub dropped: Vec<usize>,
}

/// Keeps the smallest number of principal components whose cumulative
/// explained variance reaches `threshold` (in (0, 1]).
pub fn pca_reduce(vectors: &[Vec<f64>], threshold: f64) -> Result<PcaReduction> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "variance threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let p = check_rows(vectors, 2)?;
    let n = vectors.len() as f64;
    let mean = column_means(vectors, p);
    let mut var = vec![0.0; p];
    for v in vectors {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    for s in &mut var {
        *s /= n - 1.0;
    }
    let kept: Vec<usize> = (0..p).filter(|&j| var[j] > 0.0).collect();
    let dropped: Vec<usize> = (0..p).filter(|&j| var[j] == 0.0).collect();
    if kept.is_empty() {
        return Err(Error::InsufficientData(
            "all features have zero variance".into(),
        ));
    }

    // correlation matrix = covariance of z-scores
    let z: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            kept.iter()
                .map(|&j| (v[j] - mean[j]) / var[j].sqrt())
                .collect()
        })
        .collect();
    let q = kept.len();
    let mut corr = DMatrix::zeros(q, q);
    for zv in &z {
        let c = DVector::from_column_slice(zv);
        corr += &c * c.transpose();
    }
    corr /= n - 1.0;
    corr = (&corr + corr.transpose()) * 0.5;

    let eigen = corr.symmetric_eigen();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let total: f64 = eigen.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let explained: Vec<f64> = order
        .iter()
        .map(|&j| eigen.eigenvalues[j].max(0.0) / total)
        .collect();

    let mut cumulative = 0.0;
    let mut components = q;
    for (k, r) in explained.iter().enumerate() {
        cumulative += r;
        // tolerate roundoff at the boundary, e.g. data exactly on a line
        if cumulative >= threshold - 1e-12 {
            components = k + 1;
            break;
        }
    }

    let reduced = z
        .iter()
        .map(|zv| {
            let c = DVector::from_column_slice(zv);
            order[..components]
                .iter()
                .map(|&j| eigen.eigenvectors.column(j).dot(&c))
                .collect()
        })
        .collect();
    Ok(PcaReduction { reduced, components, explained, dropped })
}
