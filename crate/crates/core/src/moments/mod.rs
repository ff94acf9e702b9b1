//! Moment engine for the permutation-invariant Gaussian matrix model.
//!
//! The model is a Gaussian over symmetric zero-diagonal `D x D` matrices whose
//! action is invariant under simultaneous row/column permutations. It has four
//! couplings: a rescaled linear coupling `mu_tilde_v0` and one positive
//! quadratic coupling per irreducible block (`tau_v0`, `tau_vh`, `tau_v2`).
//!
//! Everything downstream runs off two reductions of that Gaussian:
//!
//! * [`PatternMoments`]: by permutation invariance the one-point function is a
//!   single number `mbar` and the two-point function of distinct entries
//!   depends only on how many indices the two entry pairs share (2, 1 or 0).
//!   These four numbers are obtained by evaluating the block-projector
//!   covariance kernel at representative index patterns.
//! * [`expectation`]: Wick's theorem over the pattern moments, summing index
//!   coincidence patterns exactly via set partitions, gives the expectation of
//!   any graph observable of degree <= 4 (and powers thereof for variances).
//!
//! [`symbolic_expectation`] re-derives the same expectations as exact rational
//! expressions in `D`, and [`cubic_expectation_analytic`] hard-codes the
//! published closed forms; the test suite checks all three against each other.

mod cubic;
mod sigma;
mod symbolic;
mod wick;

pub use cubic::{analytic_expectation, analytic_moment_expression, cubic_expectation_analytic};
pub use sigma::{theoretical_sigma, ParamSigmas, SigmaMethod, COUPLING_SHIFT_PRESET};
pub use symbolic::{symbolic_expectation, CouplingMono, DeltaPoly, MomentExpression, PolyD, RatFun};
pub use wick::{expectation, product_expectation, DEFAULT_COST_BUDGET};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rep::{self, MIN_DIM};

/// Couplings of the block-diagonal Gaussian action.
///
/// The action reads, in terms of the block components `s` of the matrix,
///
/// ```text
/// S = -mu_v0 s_v0 + tau_v0/2 s_v0^2 + tau_vh/2 |s_vh|^2 + tau_v2/2 |s_v2|^2
/// ```
///
/// so `s_v0 ~ N(mu_tilde_v0, 1/tau_v0)` with `mu_tilde_v0 = mu_v0 / tau_v0`,
/// and the other blocks are centered with variances `1/tau_vh`, `1/tau_v2`.
/// Positivity of the three `tau` couplings is required for convergence and is
/// enforced at construction (and on deserialization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams", into = "RawModelParams")]
pub struct ModelParams {
    mu_tilde_v0: f64,
    tau_v0: f64,
    tau_vh: f64,
    tau_v2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawModelParams {
    mu_tilde_v0: f64,
    tau_v0: f64,
    tau_vh: f64,
    tau_v2: f64,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.mu_tilde_v0, raw.tau_v0, raw.tau_vh, raw.tau_v2)
    }
}

impl From<ModelParams> for RawModelParams {
    fn from(p: ModelParams) -> Self {
        RawModelParams {
            mu_tilde_v0: p.mu_tilde_v0,
            tau_v0: p.tau_v0,
            tau_vh: p.tau_vh,
            tau_v2: p.tau_v2,
        }
    }
}

impl ModelParams {
    /// Validates finiteness of all couplings and positivity of the taus.
    pub fn new(mu_tilde_v0: f64, tau_v0: f64, tau_vh: f64, tau_v2: f64) -> Result<Self> {
        for (name, value) in [
            ("mu_tilde_v0", mu_tilde_v0),
            ("tau_v0", tau_v0),
            ("tau_vh", tau_vh),
            ("tau_v2", tau_v2),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {value} is not finite")));
            }
        }
        for (name, value) in [("tau_v0", tau_v0), ("tau_vh", tau_vh), ("tau_v2", tau_v2)] {
            if value <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} = {value} must be positive for the Gaussian to converge"
                )));
            }
        }
        Ok(ModelParams { mu_tilde_v0, tau_v0, tau_vh, tau_v2 })
    }

    pub fn mu_tilde_v0(&self) -> f64 {
        self.mu_tilde_v0
    }

    pub fn tau_v0(&self) -> f64 {
        self.tau_v0
    }

    pub fn tau_vh(&self) -> f64 {
        self.tau_vh
    }

    pub fn tau_v2(&self) -> f64 {
        self.tau_v2
    }

    /// The unrescaled linear coupling `mu_v0 = tau_v0 * mu_tilde_v0`.
    pub fn mu_v0(&self) -> f64 {
        self.tau_v0 * self.mu_tilde_v0
    }

    /// Inverse quadratic couplings `(1/tau_v0, 1/tau_vh, 1/tau_v2)`.
    pub fn inv_taus(&self) -> [f64; 3] {
        [1.0 / self.tau_v0, 1.0 / self.tau_vh, 1.0 / self.tau_v2]
    }

    /// Rewrites the action on block components as an action on matrix entries,
    ///
    /// ```text
    /// S = tau_1 sum M_ij^2 + tau_2 sum M_ij M_jk + tau_3 sum M_ij M_kl - mu sum M_ij
    /// ```
    ///
    /// (all sums unrestricted over `1..D`). The linear map between the two
    /// coupling sets is obtained by expanding the three projector quadratic
    /// forms in row sums and totals and matching coefficients; it is a
    /// reconstruction, not an independently published relation, and is
    /// verified against the projector algebra in the tests.
    pub fn entry_couplings(&self, dim: usize) -> Result<EntryCouplings> {
        check_dim(dim)?;
        let d = dim as f64;
        let tau_1 = self.tau_v2 / 2.0;
        let tau_2 = (self.tau_vh - self.tau_v2) / (d - 2.0);
        let tau_3 = (self.tau_v0 - self.tau_v2) / (2.0 * d * (d - 1.0))
            - (self.tau_vh - self.tau_v2) / (d * (d - 2.0));
        let mu = self.mu_v0() / (d * (d - 1.0)).sqrt();
        Ok(EntryCouplings { mu, tau_1, tau_2, tau_3 })
    }

    /// Inverse of [`entry_couplings`](Self::entry_couplings). Fails if the
    /// resulting block couplings are not all positive.
    pub fn from_entry_couplings(ec: &EntryCouplings, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let d = dim as f64;
        let tau_v2 = 2.0 * ec.tau_1;
        let tau_vh = (d - 2.0) * ec.tau_2 + tau_v2;
        let tau_v0 = 2.0 * d * (d - 1.0) * ec.tau_3 + 2.0 * (d - 1.0) * ec.tau_2 + tau_v2;
        let mu_v0 = (d * (d - 1.0)).sqrt() * ec.mu;
        ModelParams::new(mu_v0 / tau_v0, tau_v0, tau_vh, tau_v2)
    }
}

/// Couplings of the action written directly on matrix entries; see
/// [`ModelParams::entry_couplings`] for the convention (in particular the
/// linear term enters the action as `-mu sum M_ij`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryCouplings {
    pub mu: f64,
    pub tau_1: f64,
    pub tau_2: f64,
    pub tau_3: f64,
}

/// Reduced description of the model Gaussian: the common off-diagonal mean and
/// the entry covariances grouped by index-overlap pattern.
///
/// For `i != j`, `k != l`, permutation invariance forces
///
/// ```text
/// E[M_ij]            = mbar
/// Cov(M_ij, M_kl)    = var           if {i,j} == {k,l}
///                    = cov_share1    if |{i,j} ∩ {k,l}| == 1
///                    = cov_disjoint  if the pairs are disjoint
/// ```
///
/// The values are produced by evaluating the block covariance kernel at one
/// representative pattern each, so every downstream moment inherits the exact
/// kernel rather than a re-derived closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMoments {
    dim: usize,
    mbar: f64,
    var: f64,
    cov_share1: f64,
    cov_disjoint: f64,
}

impl PatternMoments {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Common mean of every off-diagonal entry.
    pub fn mbar(&self) -> f64 {
        self.mbar
    }

    /// Variance of a single off-diagonal entry.
    pub fn var(&self) -> f64 {
        self.var
    }

    /// Covariance of two entries sharing exactly one index.
    pub fn cov_share1(&self) -> f64 {
        self.cov_share1
    }

    /// Covariance of two entries with disjoint index pairs.
    pub fn cov_disjoint(&self) -> f64 {
        self.cov_disjoint
    }

    /// Covariance of two off-diagonal entries whose unordered index pairs
    /// share `overlap` indices. Two distinct unordered pairs can share at most
    /// one index, so overlap 2 means equal pairs.
    pub fn cov_by_overlap(&self, overlap: usize) -> f64 {
        match overlap {
            2 => self.var,
            1 => self.cov_share1,
            0 => self.cov_disjoint,
            _ => unreachable!("index pairs share at most 2 indices"),
        }
    }

    /// Mean of the grand total `T = sum_ij M_ij`.
    pub fn mean_total(&self) -> f64 {
        let d = self.dim as f64;
        d * (d - 1.0) * self.mbar
    }

    /// `Cov(T, M_ij)` for any fixed `i != j`: summing the pattern covariances
    /// over the ordered pairs `(k,l)` gives
    /// `2 var + 4(D-2) cov_share1 + (D-2)(D-3) cov_disjoint`.
    /// This collapses to `1/tau_v0` because `T` lives in the one-dimensional
    /// block; the tests pin that identity.
    pub fn cov_total_entry(&self) -> f64 {
        let d = self.dim as f64;
        2.0 * self.var
            + 4.0 * (d - 2.0) * self.cov_share1
            + (d - 2.0) * (d - 3.0) * self.cov_disjoint
    }

    /// `Var(T) = D(D-1) Cov(T, M_ij)`.
    pub fn var_total(&self) -> f64 {
        let d = self.dim as f64;
        d * (d - 1.0) * self.cov_total_entry()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < MIN_DIM {
        return Err(Error::DimensionTooSmall { got: dim, min: MIN_DIM });
    }
    Ok(())
}

/// One-point function of `M_ij` divided by `mu_tilde_v0`.
///
/// Written exactly as the block decomposition produces it; algebra reduces it
/// to `(1 - delta_ij) / sqrt(D(D-1))`, which the tests confirm.
fn one_point_factor(f: &[f64], d: usize, i: usize, j: usize) -> f64 {
    let dd = d as f64;
    ((dd - 1.0) / dd.powi(3)).sqrt() - f[i * d + j] / (dd * (dd - 1.0)).sqrt()
}

/// Covariance of `M_ij` and `M_kl` from the block covariance kernel
/// `sum_blocks P_block / tau_block`, with `F(i,j) = delta_ij - 1/D`.
fn two_point_cov(f: &[f64], d: usize, inv_taus: [f64; 3], ix: [usize; 4]) -> f64 {
    let dd = d as f64;
    let [i, j, k, l] = ix;
    let fij = f[i * d + j];
    let fkl = f[k * d + l];
    let fik = f[i * d + k];
    let fil = f[i * d + l];
    let fjk = f[j * d + k];
    let fjl = f[j * d + l];

    let v0 = (fij * fkl / (dd - 1.0) - (fij + fkl) / dd + (dd - 1.0) / (dd * dd)) / dd;

    let off_ij = if i == j { 0.0 } else { 1.0 };
    let off_kl = if k == l { 0.0 } else { 1.0 };
    let vh = off_ij * off_kl * (fik + fjk + fil + fjl) / (2.0 * (dd - 2.0));

    // sum_pq F_ip F_jp F_kq F_lq F_pq, the only O(D^2) piece of the kernel
    let mut fsum = 0.0;
    for p in 0..d {
        let fip_fjp = f[i * d + p] * f[j * d + p];
        let mut inner = 0.0;
        for q in 0..d {
            inner += f[k * d + q] * f[l * d + q] * f[p * d + q];
        }
        fsum += fip_fjp * inner;
    }
    let v2 = 0.5 * fik * fjl + 0.5 * fil * fjk - dd / (dd - 2.0) * fsum - fij * fkl / (dd - 1.0);

    inv_taus[0] * v0 + inv_taus[1] * vh + inv_taus[2] * v2
}

/// Evaluates the one- and two-point kernels at representative index patterns.
///
/// Requires `D >= 4` so that a disjoint pair of index pairs exists.
pub fn pattern_moments(params: &ModelParams, dim: usize) -> Result<PatternMoments> {
    check_dim(dim)?;
    let f = rep::f_kernel(dim)?;
    let inv = params.inv_taus();
    Ok(PatternMoments {
        dim,
        mbar: params.mu_tilde_v0() * one_point_factor(&f, dim, 0, 1),
        var: two_point_cov(&f, dim, inv, [0, 1, 0, 1]),
        cov_share1: two_point_cov(&f, dim, inv, [0, 1, 0, 2]),
        cov_disjoint: two_point_cov(&f, dim, inv, [0, 1, 2, 3]),
    })
}

/// The model embedded in the 13-parameter family of permutation-invariant
/// Gaussians on full `D x D` matrices (2 mean parameters, a 2x2 and a 3x3
/// coupling matrix for the repeated blocks, and two scalar couplings).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedding13 {
    pub mu_vec: [f64; 2],
    pub lambda_v0: [[f64; 2]; 2],
    pub lambda_vh: [[f64; 3]; 3],
    pub lambda_v2: f64,
    pub lambda_v3: f64,
}

/// Point at which the 13-parameter family reduces to this model: rank-one
/// coupling matrices built from the vectors that express the zero-diagonal
/// symmetric subspace inside the full matrix space, and a vanishing
/// antisymmetric-block coupling.
pub fn embed_13param(params: &ModelParams, dim: usize) -> Result<Embedding13> {
    check_dim(dim)?;
    let d = dim as f64;
    let v0 = [((d - 1.0) / d).sqrt(), -1.0 / d.sqrt()];
    let vh = [
        ((d - 2.0) / (2.0 * d)).sqrt(),
        ((d - 2.0) / (2.0 * d)).sqrt(),
        -(2.0 / d).sqrt(),
    ];

    let mut lambda_v0 = [[0.0; 2]; 2];
    for (r, row) in lambda_v0.iter_mut().enumerate() {
        for (c, entry) in row.iter_mut().enumerate() {
            *entry = params.tau_v0() * v0[r] * v0[c];
        }
    }
    let mut lambda_vh = [[0.0; 3]; 3];
    for (r, row) in lambda_vh.iter_mut().enumerate() {
        for (c, entry) in row.iter_mut().enumerate() {
            *entry = params.tau_vh() * vh[r] * vh[c];
        }
    }

    Ok(Embedding13 {
        mu_vec: [params.mu_v0() * v0[0], params.mu_v0() * v0[1]],
        lambda_v0,
        lambda_vh,
        lambda_v2: params.tau_v2(),
        lambda_v3: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::CorrelationMatrix;
    use crate::observables::{evaluate, ObservableId};
    use crate::rep::Irrep;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(mu: f64, t0: f64, th: f64, t2: f64) -> ModelParams {
        ModelParams::new(mu, t0, th, t2).unwrap()
    }

    // Closed forms for the pattern moments, derived once by hand from the
    // block kernel (P_phys = P_v0 + P_vh + P_v2 evaluated entrywise) and kept
    // here purely as an independent cross-check of the literal kernel code.
    fn closed_form(p: &ModelParams, dim: usize) -> (f64, f64, f64, f64) {
        let d = dim as f64;
        let [t0, th, t2] = p.inv_taus();
        let mbar = p.mu_tilde_v0() / (d * (d - 1.0)).sqrt();
        let var = t0 / (d * (d - 1.0)) + th / d + t2 * (d - 3.0) / (2.0 * (d - 1.0));
        let c1 = t0 / (d * (d - 1.0)) + th * (d - 4.0) / (2.0 * d * (d - 2.0))
            - t2 * (d - 3.0) / (2.0 * (d - 1.0) * (d - 2.0));
        let c0 = t0 / (d * (d - 1.0)) - 2.0 * th / (d * (d - 2.0))
            + t2 / ((d - 1.0) * (d - 2.0));
        (mbar, var, c1, c0)
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(0.0, -0.5, 1.0, 1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(-3.0, 0.1, 0.2, 0.3).is_ok());
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let p = params(0.5, 1.0, 2.0, 3.0);
        let json = serde_json::to_string(&p).unwrap();
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);

        let bad = r#"{"mu_tilde_v0":0.0,"tau_v0":-1.0,"tau_vh":1.0,"tau_v2":1.0}"#;
        assert!(serde_json::from_str::<ModelParams>(bad).is_err());
    }

    #[test]
    fn mu_v0_is_tau_times_mu_tilde() {
        let p = params(0.5, 4.0, 1.0, 1.0);
        assert_abs_diff_eq!(p.mu_v0(), 2.0);
    }

    #[test]
    fn rejects_small_dims() {
        let p = params(0.1, 1.0, 1.0, 1.0);
        assert!(pattern_moments(&p, 3).is_err());
        assert!(embed_13param(&p, 2).is_err());
        assert!(p.entry_couplings(3).is_err());
    }

    #[test]
    fn one_point_factor_reduces_to_off_diagonal_constant() {
        for d in [4, 7, 19] {
            let f = rep::f_kernel(d).unwrap();
            let expect = 1.0 / (d as f64 * (d as f64 - 1.0)).sqrt();
            assert_abs_diff_eq!(one_point_factor(&f, d, 0, 1), expect, epsilon = 1e-14);
            assert_abs_diff_eq!(one_point_factor(&f, d, 2, 2), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn kernel_matches_closed_forms() {
        let cases = [
            (4, params(0.6, 2.5, 0.4, 0.9)),
            (6, params(-1.2, 0.7, 3.0, 1.5)),
            (19, params(5.5, 1.0, 20.0, 100.0)),
        ];
        for (dim, p) in cases {
            let pm = pattern_moments(&p, dim).unwrap();
            let (mbar, var, c1, c0) = closed_form(&p, dim);
            assert_relative_eq!(pm.mbar(), mbar, max_relative = 1e-12);
            assert_relative_eq!(pm.var(), var, max_relative = 1e-12);
            assert_relative_eq!(pm.cov_share1(), c1, max_relative = 1e-12);
            assert_relative_eq!(pm.cov_disjoint(), c0, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_mu_gives_zero_mean() {
        let pm = pattern_moments(&params(0.0, 0.3, 0.7, 2.0), 8).unwrap();
        assert_eq!(pm.mbar(), 0.0);
        assert_eq!(pm.mean_total(), 0.0);
    }

    #[test]
    fn total_mean_matches_linear_expectation() {
        // D(D-1) * mbar must equal sqrt(D(D-1)) * mu_tilde.
        let p = params(1.3, 0.9, 1.1, 0.5);
        for dim in [4, 9, 19] {
            let pm = pattern_moments(&p, dim).unwrap();
            let d = dim as f64;
            assert_relative_eq!(
                pm.mean_total(),
                (d * (d - 1.0)).sqrt() * p.mu_tilde_v0(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn unit_couplings_entry_variance() {
        // At D=6 with all taus 1 and centered mean, D(D-1) Var(M_ij) counts
        // the physical dimensions: 1 + (D-1) + D(D-3)/2 = 15.
        let pm = pattern_moments(&params(0.0, 1.0, 1.0, 1.0), 6).unwrap();
        assert_relative_eq!(30.0 * pm.var(), 15.0, max_relative = 1e-12);
    }

    #[test]
    fn total_couples_only_to_v0() {
        // Cov(T, M_ij) and Var(T) see only the one-dimensional block.
        let p = params(0.8, 0.25, 3.0, 12.0);
        for dim in [4, 7, 19] {
            let pm = pattern_moments(&p, dim).unwrap();
            let d = dim as f64;
            assert_relative_eq!(pm.cov_total_entry(), 1.0 / p.tau_v0(), max_relative = 1e-10);
            assert_relative_eq!(
                pm.var_total(),
                d * (d - 1.0) / p.tau_v0(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn overlap_lookup() {
        let pm = pattern_moments(&params(0.2, 1.0, 2.0, 3.0), 5).unwrap();
        assert_eq!(pm.cov_by_overlap(2), pm.var());
        assert_eq!(pm.cov_by_overlap(1), pm.cov_share1());
        assert_eq!(pm.cov_by_overlap(0), pm.cov_disjoint());
    }

    /// Builds a deterministic symmetric zero-diagonal matrix.
    fn test_matrix(d: usize, seed: u64) -> CorrelationMatrix {
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let n = d * (d - 1) / 2;
        let upper: Vec<f64> = (0..n).map(|_| next()).collect();
        CorrelationMatrix::from_upper(d, &upper, "t").unwrap()
    }

    #[test]
    fn entry_couplings_reproduce_action() {
        // tau_1 Q1 + tau_2 Q2 + tau_3 Q3 must equal the block quadratic form
        // sum tau_block <m, P_block m> / 2, and mu T must equal mu_v0 s_v0.
        let p = params(0.7, 1.9, 0.6, 2.4);
        for dim in [4, 6, 11] {
            let ec = p.entry_couplings(dim).unwrap();
            let m = test_matrix(dim, 17 + dim as u64);
            let q1 = evaluate(&m, ObservableId::Q1);
            let q2 = evaluate(&m, ObservableId::Q2);
            let q3 = evaluate(&m, ObservableId::Q3);
            let entry_form = ec.tau_1 * q1 + ec.tau_2 * q2 + ec.tau_3 * q3;

            let mut block_form = 0.0;
            for (irrep, tau) in [
                (Irrep::V0, p.tau_v0()),
                (Irrep::VH, p.tau_vh()),
                (Irrep::V2, p.tau_v2()),
            ] {
                let proj = rep::project(&m, irrep).unwrap();
                let dot: f64 = m
                    .as_slice()
                    .iter()
                    .zip(proj.as_slice())
                    .map(|(a, b)| a * b)
                    .sum();
                block_form += 0.5 * tau * dot;
            }
            assert_relative_eq!(entry_form, block_form, max_relative = 1e-10);

            let clebschs = rep::build_clebschs(dim).unwrap();
            let s_v0 = rep::decompose(&m, &clebschs).unwrap().s_v0;
            assert_relative_eq!(ec.mu * m.total(), p.mu_v0() * s_v0, max_relative = 1e-10);
        }
    }

    #[test]
    fn entry_couplings_round_trip() {
        let p = params(-0.4, 2.2, 0.9, 3.1);
        for dim in [4, 8, 19] {
            let ec = p.entry_couplings(dim).unwrap();
            let back = ModelParams::from_entry_couplings(&ec, dim).unwrap();
            assert_relative_eq!(back.mu_tilde_v0(), p.mu_tilde_v0(), max_relative = 1e-12);
            assert_relative_eq!(back.tau_v0(), p.tau_v0(), max_relative = 1e-12);
            assert_relative_eq!(back.tau_vh(), p.tau_vh(), max_relative = 1e-12);
            assert_relative_eq!(back.tau_v2(), p.tau_v2(), max_relative = 1e-12);
        }
    }

    #[test]
    fn embedding_structure() {
        let p = params(0.9, 1.7, 0.8, 2.6);
        let dim = 19;
        let d = dim as f64;
        let e = embed_13param(&p, dim).unwrap();

        assert_eq!(e.lambda_v3, 0.0);
        assert_eq!(e.lambda_v2, p.tau_v2());
        assert_relative_eq!(e.mu_vec[0], p.mu_v0() * ((d - 1.0) / d).sqrt());
        assert_relative_eq!(e.mu_vec[1], -p.mu_v0() / d.sqrt());

        // Rank-one blocks with trace equal to the block coupling.
        let tr0 = e.lambda_v0[0][0] + e.lambda_v0[1][1];
        assert_relative_eq!(tr0, p.tau_v0(), max_relative = 1e-12);
        let det0 = e.lambda_v0[0][0] * e.lambda_v0[1][1] - e.lambda_v0[0][1] * e.lambda_v0[1][0];
        assert_abs_diff_eq!(det0, 0.0, epsilon = 1e-12);

        let trh: f64 = (0..3).map(|i| e.lambda_vh[i][i]).sum();
        assert_relative_eq!(trh, p.tau_vh(), max_relative = 1e-12);
        for r in 0..3 {
            for c in 0..3 {
                // rank one: rows proportional to the generating vector
                let lhs = e.lambda_vh[r][c] * e.lambda_vh[0][0];
                let rhs = e.lambda_vh[r][0] * e.lambda_vh[0][c];
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
            }
        }
    }
}
