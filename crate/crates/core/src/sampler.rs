//! Seeded sampling of model ensembles.
//!
//! A draw is `M = mbar (J - I) + sum_L tau_L^{-1/2} P_L(G)`: the projectors
//! are idempotent, so `tau^{-1/2} P` is an exact square root of the model
//! covariance `sum_L tau_L^{-1} P_L` on each block, and no explicit harmonic
//! basis is ever needed. `G` is symmetric, zero-diagonal white noise,
//! normalized against the ordered-entry inner product (each unordered pair
//! carries variance 1/2), which is the normalization under which the sample
//! covariance reproduces the model's two-point kernel; the moment tests pin
//! this down.
//!
//! Randomness is fully deterministic: matrix `index` draws from stream
//! `index` of a ChaCha8 generator seeded with the config seed, and normals
//! come from a fixed-consumption Box-Muller transform, so parallel and
//! serial generation produce byte-identical ensembles.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::fit;
use crate::ensemble::{CorrelationMatrix, Ensemble};
use crate::error::{Error, Result};
use crate::moments::ModelParams;
use crate::rep::MIN_DIM;

/// Everything needed to draw a reproducible ensemble.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    pub params: ModelParams,
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
}

impl SamplerConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < MIN_DIM {
            return Err(Error::DimensionTooSmall { got: self.dim, min: MIN_DIM });
        }
        if self.count == 0 {
            return Err(Error::InvalidParams("sample count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws `config.count` matrices; deterministic in `config`.
pub fn sample(config: &SamplerConfig) -> Result<Ensemble> {
    config.validate()?;
    let matrices: Vec<CorrelationMatrix> = (0..config.count)
        .into_par_iter()
        .map(|index| sample_matrix(&config.params, config.dim, config.seed, index as u64))
        .collect::<Result<_>>()?;
    Ensemble::new(config.dim, matrices)
}

/// Draws the matrix at position `index` of the ensemble `(seed, params, dim)`
/// without materializing the rest.
pub fn sample_matrix(
    params: &ModelParams,
    dim: usize,
    seed: u64,
    index: u64,
) -> Result<CorrelationMatrix> {
    if dim < MIN_DIM {
        return Err(Error::DimensionTooSmall { got: dim, min: MIN_DIM });
    }
    let d = dim as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut normals = BoxMuller::new(rng);

    // white noise on the upper triangle, variance 1/2 per unordered pair
    let pairs = dim * (dim - 1) / 2;
    let mut g = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        g.push(normals.next() * std::f64::consts::FRAC_1_SQRT_2);
    }

    // row sums and total of the symmetric zero-diagonal G
    let mut rows = vec![0.0; dim];
    let mut idx = 0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            rows[i] += g[idx];
            rows[j] += g[idx];
            idx += 1;
        }
    }
    let total: f64 = 2.0 * g.iter().sum::<f64>();

    let [t0, th, t2] = params.inv_taus();
    let (s0, sh, s2) = (t0.sqrt(), th.sqrt(), t2.sqrt());
    let mbar = pattern_mean(params, d);
    let g0 = total / (d * (d - 1.0));

    let mut upper = Vec::with_capacity(pairs);
    let mut idx = 0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let gh = (rows[i] + rows[j] - 2.0 * total / d) / (d - 2.0);
            let g2 = g[idx] - g0 - gh;
            upper.push(mbar + s0 * g0 + sh * gh + s2 * g2);
            idx += 1;
        }
    }
    CorrelationMatrix::from_upper(dim, &upper, format!("sample-{index:06}"))
}

fn pattern_mean(params: &ModelParams, d: f64) -> f64 {
    params.mu_tilde_v0() / (d * (d - 1.0)).sqrt()
}

/// Samples an ensemble and fits it back; the validation harness for the
/// sampler/fit pair.
pub fn sample_fit_roundtrip(
    params: &ModelParams,
    dim: usize,
    count: usize,
    seed: u64,
) -> Result<ModelParams> {
    let ensemble = sample(&SamplerConfig { params: params.clone(), dim, count, seed })?;
    let report = fit(&ensemble)?;
    report.params.ok_or_else(|| {
        Error::InvalidParams(format!(
            "fitted couplings not all positive: {:?}",
            report.violations
        ))
    })
}

/// Box-Muller normal generator with fixed stream consumption: exactly one
/// u64 per uniform, two uniforms per pair of normals, no rejection.
struct BoxMuller {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl BoxMuller {
    fn new(rng: ChaCha8Rng) -> Self {
        BoxMuller { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u in (0,1] so ln(u) is finite; v in [0,1)
        let u = ((self.rng.next_u64() >> 11) + 1) as f64 * 2f64.powi(-53);
        let v = (self.rng.next_u64() >> 11) as f64 * 2f64.powi(-53);
        let radius = (-2.0 * u.ln()).sqrt();
        let angle = std::f64::consts::TAU * v;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
