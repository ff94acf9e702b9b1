//! Closed-form expectations for the linear, quadratic, and cubic observables.
//!
//! These are independent hand transcriptions, kept separate from the
//! expansion engines on purpose: the test suite demands that engine output,
//! the numeric forms here, and the symbolic forms here all agree. Three cubic
//! coefficients circulating in earlier write-ups (the pure-cube tau_v2 term,
//! the trace-cube tau_v0/tau_vh terms, and the row-weighted quadratic
//! tau_v0/tau_vh terms) fail that cross-check; the versions below are the
//! ones confirmed by the first-principles expansion and by direct Monte
//! Carlo.

use crate::error::{Error, Result};
use crate::observables::ObservableId;
use crate::rep::MIN_DIM;

use super::symbolic::{CouplingMono, MomentExpression, RatFun};
use super::ModelParams;

fn check_dim(dim: usize) -> Result<()> {
    if dim < MIN_DIM {
        return Err(Error::DimensionTooSmall { got: dim, min: MIN_DIM });
    }
    Ok(())
}

/// Closed-form expectation, available for the linear, the three quadratic,
/// and the eight cubic observables.
///
/// Plain `f64` arithmetic straight from the printed forms; see
/// [`analytic_moment_expression`] for the same content as exact symbolic
/// expressions.
pub fn analytic_expectation(
    id: ObservableId,
    params: &ModelParams,
    dim: usize,
) -> Result<f64> {
    check_dim(dim)?;
    let d = dim as f64;
    let mu = params.mu_tilde_v0();
    let [t0, th, t2] = params.inv_taus();
    let root = (d * (d - 1.0)).sqrt();
    // common prefactor sqrt((D-1)/D) = sqrt(D(D-1))/D
    let rq = root / d;
    use ObservableId::*;
    let value = match id {
        LIN => root * mu,
        Q1 => mu * mu + t0 + (d - 1.0) * th + d * (d - 3.0) / 2.0 * t2,
        Q2 => (d - 1.0) * (mu * mu + t0) + (d - 1.0) * (d - 2.0) / 2.0 * th,
        Q3 => d * (d - 1.0) * (mu * mu + t0),
        O1 => {
            mu / (2.0 * root)
                * (2.0 * mu * mu + 6.0 * t0 + 6.0 * (d - 1.0) * th
                    + 3.0 * d * (d - 3.0) * t2)
        }
        O2 => {
            rq * mu / 2.0
                * (2.0 * mu * mu + 6.0 * t0 + (4.0 * d - 6.0) * th
                    + d * (d - 3.0) * t2)
        }
        O3 => {
            mu / (2.0 * d * root)
                * (2.0 * d * (d - 2.0) * mu * mu + 6.0 * d * (d - 2.0) * t0
                    + 3.0 * d * (d - 1.0) * (d - 4.0) * th
                    - 3.0 * d * d * (d - 3.0) * t2)
        }
        O4 => {
            rq * mu / 2.0
                * (2.0 * d * mu * mu + 6.0 * d * t0 + 2.0 * d * (d - 1.0) * th
                    + d * d * (d - 3.0) * t2)
        }
        O5 => {
            rq * mu / 2.0
                * (2.0 * (d - 1.0) * mu * mu + 6.0 * (d - 1.0) * t0
                    + (2.0 * d - 3.0) * (d - 2.0) * th)
        }
        O6 => {
            (d - 1.0) * rq * mu / 2.0
                * (2.0 * mu * mu + 6.0 * t0 + 3.0 * (d - 2.0) * th)
        }
        O7 => {
            (d - 1.0) * root * mu / 2.0
                * (2.0 * mu * mu + 6.0 * t0 + (d - 2.0) * th)
        }
        O8 => d * (d - 1.0) * root * mu * (mu * mu + 3.0 * t0),
        other => return Err(Error::NoAnalyticForm(other.name().to_string())),
    };
    Ok(value)
}

/// Closed-form expectation restricted to the eight cubic observables.
pub fn cubic_expectation_analytic(
    id: ObservableId,
    params: &ModelParams,
    dim: usize,
) -> Result<f64> {
    if id.degree() != 3 {
        return Err(Error::NoAnalyticForm(id.name().to_string()));
    }
    analytic_expectation(id, params, dim)
}

/// The closed forms of [`analytic_expectation`] as exact symbolic
/// expressions, for structural comparison against [`symbolic_expectation`].
///
/// [`symbolic_expectation`]: super::symbolic_expectation
pub fn analytic_moment_expression(id: ObservableId) -> Result<MomentExpression> {
    let mono = |mu: u8, t_v0: u8, t_vh: u8, t_v2: u8| CouplingMono { mu, t_v0, t_vh, t_v2 };
    let f = RatFun::fraction;
    use ObservableId::*;
    let terms: Vec<(CouplingMono, RatFun)> = match id {
        LIN => vec![(mono(1, 0, 0, 0), RatFun::one())],
        Q1 => vec![
            (mono(2, 0, 0, 0), RatFun::one()),
            (mono(0, 1, 0, 0), RatFun::one()),
            (mono(0, 0, 1, 0), f(&[-1, 1], &[1])),
            (mono(0, 0, 0, 1), f(&[0, -3, 1], &[2])),
        ],
        Q2 => vec![
            (mono(2, 0, 0, 0), f(&[-1, 1], &[1])),
            (mono(0, 1, 0, 0), f(&[-1, 1], &[1])),
            (mono(0, 0, 1, 0), f(&[2, -3, 1], &[2])),
        ],
        Q3 => vec![
            (mono(2, 0, 0, 0), f(&[0, -1, 1], &[1])),
            (mono(0, 1, 0, 0), f(&[0, -1, 1], &[1])),
        ],
        O1 => vec![
            (mono(3, 0, 0, 0), f(&[1], &[0, -1, 1])),
            (mono(1, 1, 0, 0), f(&[3], &[0, -1, 1])),
            (mono(1, 0, 1, 0), f(&[3], &[0, 1])),
            (mono(1, 0, 0, 1), f(&[-9, 3], &[-2, 2])),
        ],
        O2 => vec![
            (mono(3, 0, 0, 0), f(&[1], &[0, 1])),
            (mono(1, 1, 0, 0), f(&[3], &[0, 1])),
            (mono(1, 0, 1, 0), f(&[-3, 2], &[0, 1])),
            (mono(1, 0, 0, 1), f(&[-3, 1], &[2])),
        ],
        O3 => vec![
            (mono(3, 0, 0, 0), f(&[-2, 1], &[0, -1, 1])),
            (mono(1, 1, 0, 0), f(&[-6, 3], &[0, -1, 1])),
            (mono(1, 0, 1, 0), f(&[-12, 3], &[0, 2])),
            (mono(1, 0, 0, 1), f(&[9, -3], &[-2, 2])),
        ],
        O4 => vec![
            (mono(3, 0, 0, 0), RatFun::one()),
            (mono(1, 1, 0, 0), RatFun::integer(3)),
            (mono(1, 0, 1, 0), f(&[-1, 1], &[1])),
            (mono(1, 0, 0, 1), f(&[0, -3, 1], &[2])),
        ],
        O5 => vec![
            (mono(3, 0, 0, 0), f(&[-1, 1], &[0, 1])),
            (mono(1, 1, 0, 0), f(&[-3, 3], &[0, 1])),
            (mono(1, 0, 1, 0), f(&[6, -7, 2], &[0, 2])),
        ],
        O6 => vec![
            (mono(3, 0, 0, 0), f(&[-1, 1], &[0, 1])),
            (mono(1, 1, 0, 0), f(&[-3, 3], &[0, 1])),
            (mono(1, 0, 1, 0), f(&[6, -9, 3], &[0, 2])),
        ],
        O7 => vec![
            (mono(3, 0, 0, 0), f(&[-1, 1], &[1])),
            (mono(1, 1, 0, 0), f(&[-3, 3], &[1])),
            (mono(1, 0, 1, 0), f(&[2, -3, 1], &[2])),
        ],
        O8 => vec![
            (mono(3, 0, 0, 0), f(&[0, -1, 1], &[1])),
            (mono(1, 1, 0, 0), f(&[0, -3, 3], &[1])),
        ],
        other => return Err(Error::NoAnalyticForm(other.name().to_string())),
    };
    Ok(MomentExpression::with_terms(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{expectation, symbolic_expectation};
    use crate::observables::graph;
    use approx::assert_relative_eq;

    const SUPPORTED: [ObservableId; 12] = {
        use ObservableId::*;
        [LIN, Q1, Q2, Q3, O1, O2, O3, O4, O5, O6, O7, O8]
    };

    #[test]
    fn numeric_and_symbolic_transcriptions_agree() {
        let params = ModelParams::new(0.8, 2.2, 0.7, 3.1).unwrap();
        for dim in [4usize, 6, 19] {
            for id in SUPPORTED {
                let numeric = analytic_expectation(id, &params, dim).unwrap();
                let symbolic = analytic_moment_expression(id)
                    .unwrap()
                    .evaluate(&params, dim)
                    .unwrap();
                assert_relative_eq!(numeric, symbolic, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn engine_reproduces_closed_forms_numerically() {
        let cases = [
            ModelParams::new(0.5, 1.0, 1.0, 1.0).unwrap(),
            ModelParams::new(-0.9, 0.4, 2.7, 1.3).unwrap(),
        ];
        for params in &cases {
            for dim in [4usize, 7, 12] {
                for id in SUPPORTED {
                    let engine = expectation(graph(id), params, dim).unwrap();
                    let closed = analytic_expectation(id, params, dim).unwrap();
                    assert_relative_eq!(engine, closed, max_relative = 1e-12, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn engine_reproduces_closed_forms_symbolically() {
        // exact structural equality of canonical expressions
        for id in SUPPORTED {
            let engine = symbolic_expectation(graph(id)).unwrap();
            let transcription = analytic_moment_expression(id).unwrap();
            assert_eq!(engine, transcription, "symbolic mismatch for {id}");
        }
    }

    #[test]
    fn entry_cube_spot_value() {
        // D = 4, unit couplings: bracket 2 + 6 + 18 + 12 = 38, prefactor
        // 1/(2*sqrt(12))
        let params = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let value = analytic_expectation(ObservableId::O1, &params, 4).unwrap();
        assert_relative_eq!(value, 19.0 / 12f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn cubic_wrapper_rejects_non_cubics() {
        let params = ModelParams::new(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            cubic_expectation_analytic(ObservableId::Q1, &params, 6),
            Err(Error::NoAnalyticForm(_))
        ));
        assert!(cubic_expectation_analytic(ObservableId::O6, &params, 6).is_ok());
    }

    #[test]
    fn quartics_have_no_transcription() {
        let params = ModelParams::new(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            analytic_expectation(ObservableId::O9, &params, 6),
            Err(Error::NoAnalyticForm(_))
        ));
        assert!(matches!(
            analytic_moment_expression(ObservableId::O9),
            Err(Error::NoAnalyticForm(_))
        ));
    }

    #[test]
    fn rejects_small_dimension() {
        let params = ModelParams::new(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            analytic_expectation(ObservableId::LIN, &params, 3),
            Err(Error::DimensionTooSmall { .. })
        ));
    }
}
