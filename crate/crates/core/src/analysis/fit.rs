//! Exact moment fit of the four couplings.
//!
//! The mean of the total sum fixes the linear coupling. The three quadratic
//! moment equations then decouple when expressed through the block quadratic
//! forms `M . P_L M`: the V0 form carries the total variance, the VH form the
//! row-sum dispersion, the V2 form the residual. Each solved inverse coupling
//! is an ensemble average of a nonnegative day-level quantity (a variance for
//! V0), so a non-positive value means the corresponding block is degenerate
//! in the data, never a numerical accident; it is reported, not clipped.

use serde::Serialize;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::moments::{analytic_expectation, ModelParams};
use crate::observables::ObservableId;
use crate::rep::MIN_DIM;

/// The four empirical moment means the fit consumed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalMoments {
    pub lin: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

/// A solved inverse coupling that is not strictly positive, by block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitViolation {
    InvTauV0NonPositive,
    InvTauVHNonPositive,
    InvTauV2NonPositive,
}

/// Outcome of the exact 4-equation moment solve.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub dim: usize,
    pub count: usize,
    pub moments: EmpiricalMoments,
    /// Solved couplings, reported raw even when unusable.
    pub mu_tilde_v0: f64,
    pub inv_tau_v0: f64,
    pub inv_tau_vh: f64,
    pub inv_tau_v2: f64,
    /// Blocks whose solved inverse coupling is not positive.
    pub violations: Vec<FitViolation>,
    /// Present exactly when all inverse couplings are positive.
    pub params: Option<ModelParams>,
    /// Model-minus-empirical residuals of (LIN, Q1, Q2, Q3) at the fitted
    /// params; zero up to roundoff by construction. `None` when `params` is.
    pub residuals: Option<[f64; 4]>,
}

impl FitReport {
    /// True when every block is degenerate (e.g. an ensemble of identical
    /// matrices in the V0 case, or all-zero matrices for all three).
    pub fn degenerate(&self) -> bool {
        self.violations.len() == 3
    }
}

/// Fits the model by exact moment matching.
///
/// Requires at least two days so the variance solve is meaningful.
pub fn fit(ensemble: &Ensemble) -> Result<FitReport> {
    let dim = ensemble.dim();
    if dim < MIN_DIM {
        return Err(Error::DimensionTooSmall { got: dim, min: MIN_DIM });
    }
    let count = ensemble.len();
    if count < 2 {
        return Err(Error::InsufficientData(format!(
            "fit needs at least 2 matrices, got {count}"
        )));
    }
    let d = dim as f64;
    let n = count as f64;

    // per-day totals and quadratic forms
    let mut sum_t = 0.0;
    let mut sum_q1 = 0.0;
    let mut sum_q2 = 0.0;
    let mut sum_q3 = 0.0;
    let mut sum_vh_form = 0.0;
    let mut sum_v2_form = 0.0;
    let mut totals = Vec::with_capacity(count);
    for m in ensemble.iter() {
        let t = m.total();
        let q1: f64 = m.as_slice().iter().map(|x| x * x).sum();
        let q2: f64 = m.row_sums().iter().map(|r| r * r).sum();
        let q3 = t * t;
        totals.push(t);
        sum_t += t;
        sum_q1 += q1;
        sum_q2 += q2;
        sum_q3 += q3;
        let vh_form = 2.0 * (q2 - q3 / d) / (d - 2.0);
        sum_vh_form += vh_form;
        sum_v2_form += q1 - q3 / (d * (d - 1.0)) - vh_form;
    }
    let mean_t = sum_t / n;
    let moments = EmpiricalMoments {
        lin: mean_t,
        q1: sum_q1 / n,
        q2: sum_q2 / n,
        q3: sum_q3 / n,
    };

    let mu_tilde_v0 = mean_t / (d * (d - 1.0)).sqrt();
    // Var(T)/(D(D-1)) in deviation form: exactly zero for identical days
    let var_t: f64 = totals.iter().map(|t| (t - mean_t) * (t - mean_t)).sum::<f64>() / n;
    let inv_tau_v0 = var_t / (d * (d - 1.0));
    let inv_tau_vh = sum_vh_form / (n * (d - 1.0));
    let inv_tau_v2 = 2.0 * sum_v2_form / (n * d * (d - 3.0));

    let mut violations = Vec::new();
    if !(inv_tau_v0 > 0.0) {
        violations.push(FitViolation::InvTauV0NonPositive);
    }
    if !(inv_tau_vh > 0.0) {
        violations.push(FitViolation::InvTauVHNonPositive);
    }
    if !(inv_tau_v2 > 0.0) {
        violations.push(FitViolation::InvTauV2NonPositive);
    }

    let params = if violations.is_empty() {
        Some(ModelParams::new(
            mu_tilde_v0,
            1.0 / inv_tau_v0,
            1.0 / inv_tau_vh,
            1.0 / inv_tau_v2,
        )?)
    } else {
        None
    };
    let residuals = match &params {
        Some(p) => {
            let pred = |id| analytic_expectation(id, p, dim);
            Some([
                pred(ObservableId::LIN)? - moments.lin,
                pred(ObservableId::Q1)? - moments.q1,
                pred(ObservableId::Q2)? - moments.q2,
                pred(ObservableId::Q3)? - moments.q3,
            ])
        }
        None => None,
    };

    Ok(FitReport {
        dim,
        count,
        moments,
        mu_tilde_v0,
        inv_tau_v0,
        inv_tau_vh,
        inv_tau_v2,
        violations,
        params,
        residuals,
    })
}
