//! Symmetric-group representation machinery on the matrix space.
//!
//! The natural D-dimensional representation of S_D splits as V_0 ⊕ V_H, with
//! V_0 spanned by E_0 = (1/√D) Σ_i e_i and V_H by the D−1 orthonormal vectors
//! E_a ∝ (e_1 + … + e_a − a·e_{a+1}). Symmetric zero-diagonal matrices carry
//! the "physical" subspace of the tensor square, which splits further as
//! V_0 ⊕ V_H ⊕ V_2 with dimensions 1, D−1 and D(D−3)/2.
//!
//! This module builds:
//!
//! * the Clebsch coefficients C_{0,i}, C_{a,i} of the natural basis and the
//!   physical ones C^{V0}_{ij}, C^{VH}_{ij,a} of the matrix space;
//! * the kernel F(i,j) = Σ_a C_{a,i} C_{a,j} = δ_ij − 1/D;
//! * the three physical projectors, applied in O(D²) through their
//!   delta-expression closed forms (row sums + total sum), never materialized
//!   as dense D²×D² operators;
//! * decomposition of a matrix into (s_V0, s_VH[a], M_V2) and its inverse.
//!
//! The V_2 component is kept as a projected matrix rather than explicit
//! coordinates: its Clebsch coefficients are never needed because sampling and
//! norms only use the projector.
//!
//! Key projector identities (r_i = row sums, T = total sum, off-diagonal ij):
//!
//! ```text
//! (P_V0 M)_ij = T / (D(D−1))
//! (P_VH M)_ij = ((r_i + r_j) − 2T/D) / (D−2)
//! (P_V2 M)_ij = M_ij − (P_V0 M)_ij − (P_VH M)_ij
//! ```
//!
//! with traces 1, D−1 and D(D−3)/2, mutual orthogonality, and
//! P_V0 + P_VH + P_V2 = identity on the space of valid matrices.

use crate::ensemble::CorrelationMatrix;
use crate::error::{Error, Result};

/// Smallest dimension with a non-empty V_2 sector (dim V_2 = D(D−3)/2 > 0).
pub const MIN_DIM: usize = 4;

/// The irreducible blocks of the physical matrix space, plus their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Irrep {
    V0,
    VH,
    V2,
    /// P_V0 + P_VH + P_V2; the identity on valid symmetric zero-diagonal input.
    PhysTotal,
}

impl Irrep {
    /// Dimension of the block inside the D(D−1)/2-dimensional matrix space.
    pub fn block_dim(self, d: usize) -> usize {
        match self {
            Irrep::V0 => 1,
            Irrep::VH => d - 1,
            Irrep::V2 => d * (d - 3) / 2,
            Irrep::PhysTotal => d * (d - 1) / 2,
        }
    }
}

/// Clebsch coefficients of the natural basis and of the physical matrix space.
#[derive(Debug, Clone)]
pub struct ClebschSet {
    dim: usize,
    /// C_{0,i} = 1/√D.
    c0: Vec<f64>,
    /// C_{a,i} = (E_a, e_i); rows a = 1..D−1 (stored 0-based), columns i.
    ca: Vec<Vec<f64>>,
    /// C^{V0}_{ij}: the unit-norm V_0 direction of the matrix space.
    phys_v0: Vec<f64>,
    /// C^{VH}_{ij,a}: one unit-norm matrix per a; phys_vh[a] is row-major D×D.
    phys_vh: Vec<Vec<f64>>,
}

impl ClebschSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c0(&self) -> &[f64] {
        &self.c0
    }

    /// Row a (0-based; the paper's a = 1..D−1) of the V_H natural Clebschs.
    pub fn ca(&self, a: usize) -> &[f64] {
        &self.ca[a]
    }

    pub fn phys_v0(&self) -> &[f64] {
        &self.phys_v0
    }

    pub fn phys_v0_entry(&self, i: usize, j: usize) -> f64 {
        self.phys_v0[i * self.dim + j]
    }

    pub fn phys_vh(&self, a: usize) -> &[f64] {
        &self.phys_vh[a]
    }

    pub fn phys_vh_entry(&self, a: usize, i: usize, j: usize) -> f64 {
        self.phys_vh[a][i * self.dim + j]
    }
}

/// Builds the Clebsch coefficients for dimension D ≥ 4.
pub fn build_clebschs(d: usize) -> Result<ClebschSet> {
    if d < MIN_DIM {
        return Err(Error::DimensionTooSmall { got: d, min: MIN_DIM });
    }
    let df = d as f64;
    let c0 = vec![1.0 / df.sqrt(); d];

    // E_a = (e_1 + … + e_a − a·e_{a+1}) / √(a(a+1)), a = 1..D−1.
    let mut ca = Vec::with_capacity(d - 1);
    for a in 1..d {
        let norm = 1.0 / ((a * (a + 1)) as f64).sqrt();
        let mut row = vec![0.0; d];
        for r in row.iter_mut().take(a) {
            *r = norm;
        }
        row[a] = -(a as f64) * norm;
        ca.push(row);
    }

    let f = f_kernel_from_clebschs(&ca, d);

    // C^{V0}_ij = √((D−1)/D)·C_{0,i}C_{0,j} − (1/√(D(D−1)))·F_ij.
    let v0_lead = ((df - 1.0) / df).sqrt();
    let v0_sub = 1.0 / (df * (df - 1.0)).sqrt();
    let mut phys_v0 = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            phys_v0[i * d + j] = v0_lead * c0[i] * c0[j] - v0_sub * f[i * d + j];
        }
        // mathematically exactly zero; clear the roundoff residue
        phys_v0[i * d + i] = 0.0;
    }

    // C^{VH}_{ij,a} = √((D−2)/(2D²))·(C_{a,i} + C_{a,j})
    //                 − √(2/(D−2))·Σ_k C_{a,k} F_{ik} F_{jk}.
    let vh_lead = ((df - 2.0) / (2.0 * df * df)).sqrt();
    let vh_sub = (2.0 / (df - 2.0)).sqrt();
    let mut phys_vh = Vec::with_capacity(d - 1);
    for row in &ca {
        let mut mat = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let inner: f64 =
                    (0..d).map(|k| row[k] * f[i * d + k] * f[j * d + k]).sum();
                mat[i * d + j] = vh_lead * (row[i] + row[j]) - vh_sub * inner;
            }
            // mathematically exactly zero; clear the roundoff residue
            mat[i * d + i] = 0.0;
        }
        phys_vh.push(mat);
    }

    Ok(ClebschSet { dim: d, c0, ca, phys_v0, phys_vh })
}

fn f_kernel_from_clebschs(ca: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut f = vec![0.0; d * d];
    for row in ca {
        for i in 0..d {
            for j in 0..d {
                f[i * d + j] += row[i] * row[j];
            }
        }
    }
    f
}

/// The kernel F(i,j) = Σ_a C_{a,i} C_{a,j} = δ_ij − 1/D, in closed form.
pub fn f_kernel(d: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { got: d, min: 2 });
    }
    let df = d as f64;
    let mut f = vec![-1.0 / df; d * d];
    for i in 0..d {
        f[i * d + i] = 1.0 - 1.0 / df;
    }
    Ok(f)
}

/// Applies a physical projector through its O(D²) closed form.
pub fn project(m: &CorrelationMatrix, irrep: Irrep) -> Result<CorrelationMatrix> {
    let d = m.dim();
    if d < MIN_DIM {
        return Err(Error::DimensionTooSmall { got: d, min: MIN_DIM });
    }
    let df = d as f64;
    let out = match irrep {
        Irrep::PhysTotal => m.clone(),
        Irrep::V0 => {
            let t = m.total();
            let value = t / (df * (df - 1.0));
            let mut entries = vec![value; d * d];
            for i in 0..d {
                entries[i * d + i] = 0.0;
            }
            CorrelationMatrix::from_raw_parts(d, m.label().to_owned(), entries)
        }
        Irrep::VH => {
            let r = m.row_sums();
            let t = m.total();
            let mut entries = vec![0.0; d * d];
            for i in 0..d {
                for j in (i + 1)..d {
                    let v = ((r[i] + r[j]) - 2.0 * t / df) / (df - 2.0);
                    entries[i * d + j] = v;
                    entries[j * d + i] = v;
                }
            }
            CorrelationMatrix::from_raw_parts(d, m.label().to_owned(), entries)
        }
        Irrep::V2 => {
            let r = m.row_sums();
            let t = m.total();
            let v0 = t / (df * (df - 1.0));
            let mut entries = vec![0.0; d * d];
            for i in 0..d {
                for j in (i + 1)..d {
                    let vh = ((r[i] + r[j]) - 2.0 * t / df) / (df - 2.0);
                    let v = m.entry(i, j) - v0 - vh;
                    entries[i * d + j] = v;
                    entries[j * d + i] = v;
                }
            }
            CorrelationMatrix::from_raw_parts(d, m.label().to_owned(), entries)
        }
    };
    Ok(out)
}

/// Trace of a physical projector, summed over the pair basis:
/// tr P = Σ_{p<q} (P B^{pq})_{pq} with B^{pq} the unit matrix on pair (p,q).
///
/// Closed forms of the per-pair diagonal make this O(1) per pair.
pub fn projector_trace(irrep: Irrep, d: usize) -> Result<f64> {
    if d < MIN_DIM {
        return Err(Error::DimensionTooSmall { got: d, min: MIN_DIM });
    }
    let df = d as f64;
    let pairs = df * (df - 1.0) / 2.0;
    // For B^{pq}: row sums r_p = r_q = 1, total T = 2.
    let diag_v0 = 2.0 / (df * (df - 1.0));
    let diag_vh = (2.0 - 4.0 / df) / (df - 2.0);
    let value = match irrep {
        Irrep::V0 => pairs * diag_v0,
        Irrep::VH => pairs * diag_vh,
        Irrep::V2 => pairs * (1.0 - diag_v0 - diag_vh),
        Irrep::PhysTotal => pairs,
    };
    Ok(value)
}

/// A matrix decomposed into its irreducible physical components.
#[derive(Debug, Clone)]
pub struct Components {
    /// Coefficient along C^{V0}.
    pub s_v0: f64,
    /// Coefficients along C^{VH}_a, a = 0..D−2.
    pub s_vh: Vec<f64>,
    /// The V_2 block, kept as a projected matrix.
    pub m_v2: CorrelationMatrix,
}

/// Decomposes M into (s_V0, s_VH, M_V2).
pub fn decompose(m: &CorrelationMatrix, clebschs: &ClebschSet) -> Result<Components> {
    let d = m.dim();
    if d != clebschs.dim() {
        return Err(Error::DimensionMismatch { expected: clebschs.dim(), got: d });
    }
    let dot = |basis: &[f64]| -> f64 {
        m.as_slice().iter().zip(basis).map(|(x, c)| x * c).sum()
    };
    let s_v0 = dot(clebschs.phys_v0());
    let s_vh = (0..d - 1).map(|a| dot(clebschs.phys_vh(a))).collect();
    let m_v2 = project(m, Irrep::V2)?;
    Ok(Components { s_v0, s_vh, m_v2 })
}

/// Rebuilds M = s_V0·C^{V0} + Σ_a s_VH[a]·C^{VH}_a + M_V2.
pub fn reconstruct(components: &Components, clebschs: &ClebschSet) -> Result<CorrelationMatrix> {
    let d = clebschs.dim();
    if components.s_vh.len() != d - 1 {
        return Err(Error::DimensionMismatch { expected: d - 1, got: components.s_vh.len() });
    }
    if components.m_v2.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: components.m_v2.dim() });
    }
    let mut entries = components.m_v2.as_slice().to_vec();
    for (e, c) in entries.iter_mut().zip(clebschs.phys_v0()) {
        *e += components.s_v0 * c;
    }
    for (a, &s) in components.s_vh.iter().enumerate() {
        for (e, c) in entries.iter_mut().zip(clebschs.phys_vh(a)) {
            *e += s * c;
        }
    }
    // The basis matrices all have exactly zero diagonals, but additive rounding
    // could leave ±0 inconsistencies; re-zero explicitly.
    for i in 0..d {
        entries[i * d + i] = 0.0;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let s = 0.5 * (entries[i * d + j] + entries[j * d + i]);
            entries[i * d + j] = s;
            entries[j * d + i] = s;
        }
    }
    Ok(CorrelationMatrix::from_raw_parts(
        d,
        components.m_v2.label().to_owned(),
        entries,
    ))
}

/// Basis states of the tensor square V ⊗ V used as oracles for the Clebsch
/// normalization: each returns a D²-vector (row-major T[p][q]).
///
/// The diagonal subspace {Σ x_i e_i ⊗ e_i} decomposes against the symmetric
/// square's V_0 and V_H blocks; the inner products of these states have exact
/// closed forms, which the test-suite checks against the numerically built
/// Clebschs.
pub mod tensor_states {
    use super::{build_clebschs, f_kernel, Result};

    /// (1/√D) Σ_i e_i ⊗ e_i.
    pub fn v0_diag(d: usize) -> Result<Vec<f64>> {
        let df = d as f64;
        let mut t = vec![0.0; d * d];
        for i in 0..d {
            t[i * d + i] = 1.0 / df.sqrt();
        }
        Ok(t)
    }

    /// (1/D) Σ_{i,j} e_i ⊗ e_j: the E_0 ⊗ E_0 direction.
    pub fn v0_uniform(d: usize) -> Result<Vec<f64>> {
        let df = d as f64;
        Ok(vec![1.0 / df; d * d])
    }

    /// (1/√(D−1)) Σ_a E_a ⊗ E_a, i.e. F/√(D−1).
    pub fn v0_traceless(d: usize) -> Result<Vec<f64>> {
        let df = d as f64;
        let f = f_kernel(d)?;
        Ok(f.iter().map(|x| x / (df - 1.0).sqrt()).collect())
    }

    /// Diagonal-subspace state carrying the V_H pattern:
    /// Σ_i C_{a,i} e_i ⊗ e_i (unit norm since the C rows are orthonormal).
    pub fn vh_diag(d: usize, a: usize) -> Result<Vec<f64>> {
        let cs = build_clebschs(d)?;
        let row = cs.ca(a);
        let mut t = vec![0.0; d * d];
        for i in 0..d {
            t[i * d + i] = row[i];
        }
        Ok(t)
    }

    /// (1/√(2D)) Σ_i (e_i ⊗ E_a + E_a ⊗ e_i).
    pub fn vh_mixed(d: usize, a: usize) -> Result<Vec<f64>> {
        let df = d as f64;
        let cs = build_clebschs(d)?;
        let row = cs.ca(a);
        let norm = 1.0 / (2.0 * df).sqrt();
        let mut t = vec![0.0; d * d];
        for p in 0..d {
            for q in 0..d {
                t[p * d + q] = norm * (row[q] + row[p]);
            }
        }
        Ok(t)
    }

    /// (1/2)√(D/(D−2)) Σ_{b,c,i} C_{a,i}C_{b,i}C_{c,i} (E_b ⊗ E_c + E_c ⊗ E_b),
    /// which contracts to √(D/(D−2)) Σ_i C_{a,i} F_{ip} F_{iq}.
    pub fn vh_quadratic(d: usize, a: usize) -> Result<Vec<f64>> {
        let df = d as f64;
        let cs = build_clebschs(d)?;
        let row = cs.ca(a);
        let f = f_kernel(d)?;
        let norm = (df / (df - 2.0)).sqrt();
        let mut t = vec![0.0; d * d];
        for p in 0..d {
            for q in 0..d {
                let s: f64 = (0..d).map(|i| row[i] * f[i * d + p] * f[i * d + q]).sum();
                t[p * d + q] = norm * s;
            }
        }
        Ok(t)
    }

    /// Euclidean inner product of two D²-vectors.
    pub fn inner(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}
