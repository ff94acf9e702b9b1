//! Fitting the model to an ensemble and measuring what the fit does and does
//! not explain.
//!
//! The workflow mirrors how the model is meant to be used on daily
//! correlation ensembles:
//!
//! 1. [`fit`] matches the linear and the three quadratic observable means,
//!    which determine all four couplings exactly (triangular solve over the
//!    block quadratic forms);
//! 2. [`deviation_report`] compares every higher (cubic/quartic) observable
//!    against its model prediction in units of the experimental spread, with
//!    seeded bootstrap intervals;
//! 3. [`day_capture`] / [`balanced_accuracy`] check the 2-sigma band
//!    calibration day by day;
//! 4. [`mahalanobis`], [`euclidean_standardized`] and [`pca_reduce`] turn
//!    per-day feature vectors into outlier scores;
//! 5. [`anomaly_study`] ranks days, splits top/bottom subsets and quantifies
//!    event enrichment (odds ratio + one-sided Fisher exact test);
//! 6. [`similarity_study`] ranks day pairs under observable-space Mahalanobis
//!    and raw matrix distance and validates their agreement with a Spearman
//!    rank correlation.
//!
//! Every stochastic step (bootstrap resampling) takes an explicit seed;
//! everything else is a pure function of the ensemble.

mod anomaly;
mod capture;
mod deviation;
mod distance;
mod fit;
mod similarity;

pub use anomaly::{
    anomaly_study, fisher_exact_one_sided, fisher_exact_oracle, odds_ratio, AnomalyReport,
    DistanceMetric, FeatureSet, SubsetRow,
};
pub use capture::{balanced_accuracy, day_capture, CaptureMode, CaptureRate, ClassificationRow};
pub use deviation::{deviation_report, DeviationReport, DeviationRow};
pub use distance::{
    euclidean_standardized, mahalanobis, pca_reduce, EuclideanReport, MahalanobisReport,
    PcaReduction,
};
pub use fit::{fit, EmpiricalMoments, FitReport, FitViolation};
pub use similarity::{similarity_study, spearman, PValueMethod, SimilarityReport};
