//! Permutation-invariant Gaussian matrix models for correlation ensembles.
//!
//! A correlation matrix with its diagonal removed is a symmetric, zero-diagonal
//! D×D matrix. The symmetric group S_D acts on it by relabeling assets, and the
//! matrix space splits into the irreducible pieces V_0 ⊕ V_H ⊕ V_2 of dimensions
//! 1, D−1 and D(D−3)/2. This crate implements the 4-parameter S_D-invariant
//! Gaussian model on that space and everything needed to use it as a statistical
//! baseline for daily correlation ensembles:
//!
//! * [`ensemble`] — validated matrix/ensemble containers, permutation action, file I/O;
//! * [`rep`] — Clebsch coefficients, the F kernel and the three physical projectors;
//! * [`observables`] — the 35 invariant graph observables with fast evaluators and a
//!   brute-force oracle;
//! * [`moments`] — model parameters, Wick/set-partition moment engine, exact-rational
//!   symbolic backend, theoretical standard deviations;
//! * [`sampler`] — deterministic seeded sampling of model ensembles;
//! * [`ingest`] — tick data → per-day realized correlation matrices;
//! * [`analysis`] — moment fitting, deviation reports, day capture, outlier metrics,
//!   event-enrichment (Fisher) and similarity (Spearman) studies.
//!
//! Shared conventions: indices are 0-based everywhere; all randomness is explicit
//! (seeded, counter-based streams); all types are immutable after construction.

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod ingest;
pub mod moments;
pub mod observables;
pub mod rep;
pub mod sampler;

pub use ensemble::{CorrelationMatrix, Ensemble, Permutation};
pub use error::{Error, Result};
pub use moments::ModelParams;
pub use observables::ObservableId;

/// FNV-1a 64-bit hash, used for short provenance hashes of canonicalized configs.
///
/// Not cryptographic; stable across platforms and releases (unlike `DefaultHasher`).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
