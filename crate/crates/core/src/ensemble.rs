//! Validated matrix and ensemble containers, permutation action, and file I/O.
//!
//! A [`CorrelationMatrix`] is a symmetric D×D matrix with an exactly zero
//! diagonal (the identity is already subtracted). An [`Ensemble`] is an ordered
//! collection of such matrices sharing one dimension, one matrix per labeled day.
//!
//! File formats (both hold the strict upper triangle, 0-based indices, and
//! round-trip every finite double bit-exactly):
//!
//! * CSV: optional `# key: value` metadata lines, then a `label,i,j,value`
//!   header, then one row per entry with i < j; every label carries exactly
//!   D(D−1)/2 entries. A `# dim: D` line declares the dimension (required for
//!   empty ensembles, checked against the data otherwise).
//! * JSON: `{"dim": D, "days": [{"label": ..., "upper": [...]}]}` with `upper`
//!   in row-major (i,j), i < j order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance below which ingestion asymmetry is repaired by exact symmetrization.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric, zero-diagonal D×D matrix tagged with a day label.
///
/// Immutable after construction; all constructors validate. Entries are stored
/// row-major and kept exactly symmetric with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    dim: usize,
    label: String,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    /// Validates and builds a matrix from a raw square array.
    ///
    /// Symmetry is checked to [`SYMMETRY_TOL`], then enforced exactly as
    /// (M + Mᵀ)/2; the diagonal is forced to exactly 0.
    pub fn validate(raw: &[Vec<f64>], label: impl Into<String>) -> Result<Self> {
        let dim = raw.len();
        for (row, r) in raw.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::NonSquare { rows: dim, row, cols: r.len() });
            }
        }
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let v = raw[i][j];
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if j > i {
                    let w = raw[j][i];
                    if (v - w).abs() > SYMMETRY_TOL {
                        return Err(Error::Asymmetric { i, j, a: v, b: w, tol: SYMMETRY_TOL });
                    }
                    let s = 0.5 * (v + w);
                    entries[i * dim + j] = s;
                    entries[j * dim + i] = s;
                }
            }
        }
        Ok(Self { dim, label: label.into(), entries })
    }

    /// Builds a matrix from strict upper-triangle entries in row-major order.
    pub fn from_upper(dim: usize, upper: &[f64], label: impl Into<String>) -> Result<Self> {
        let expected = dim * (dim - 1) / 2;
        if upper.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: upper.len() });
        }
        let mut entries = vec![0.0; dim * dim];
        let mut k = 0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = upper[k];
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
                k += 1;
            }
        }
        Ok(Self { dim, label: label.into(), entries })
    }

    /// Zero matrix of the given dimension.
    pub fn zero(dim: usize, label: impl Into<String>) -> Self {
        Self { dim, label: label.into(), entries: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Entry M[i][j].
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Row-major D×D backing slice.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Strict upper triangle in row-major (i,j), i < j order.
    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim * (self.dim - 1) / 2);
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                out.push(self.entry(i, j));
            }
        }
        out
    }

    /// Row sums r_i = Σ_j M_ij.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.entries[i * self.dim..(i + 1) * self.dim].iter().sum())
            .collect()
    }

    /// Total sum Σ_ij M_ij.
    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// Checks every off-diagonal entry lies in [-1, 1] (ingestion contract).
    pub fn check_correlation_range(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let v = self.entry(i, j);
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange { i, j, value: v });
                }
            }
        }
        Ok(())
    }

    /// Returns the same matrix under a new label.
    pub fn relabeled(&self, label: impl Into<String>) -> Self {
        Self { dim: self.dim, label: label.into(), entries: self.entries.clone() }
    }

    /// Applies a permutation: result[σ(i)][σ(j)] = M[i][j].
    pub fn permute(&self, sigma: &Permutation) -> Result<Self> {
        if sigma.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: sigma.dim() });
        }
        let mut entries = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                entries[sigma.map(i) * self.dim + sigma.map(j)] = self.entry(i, j);
            }
        }
        Ok(Self { dim: self.dim, label: self.label.clone(), entries })
    }

    /// Builds from an owned row-major buffer, trusting the caller has already
    /// produced exact symmetry and a zero diagonal (used by projectors/sampler,
    /// which construct both halves from one formula). Debug builds re-check.
    pub(crate) fn from_raw_parts(dim: usize, label: String, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        debug_assert!((0..dim).all(|i| entries[i * dim + i] == 0.0));
        debug_assert!((0..dim)
            .all(|i| (0..dim).all(|j| entries[i * dim + j] == entries[j * dim + i])));
        Self { dim, label, entries }
    }
}

/// A bijection on {0..D-1}, stored as the image array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    /// Validates that `mapping` is a bijection on {0..len-1}.
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let d = mapping.len();
        let mut seen = vec![false; d];
        for &m in &mapping {
            if m >= d {
                return Err(Error::InvalidPermutation(format!("image {m} out of range 0..{d}")));
            }
            if seen[m] {
                return Err(Error::InvalidPermutation(format!("image {m} repeated")));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(dim: usize) -> Self {
        Self { mapping: (0..dim).collect() }
    }

    pub fn dim(&self) -> usize {
        self.mapping.len()
    }

    /// σ(i).
    #[inline]
    pub fn map(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }
}

/// An ordered collection of same-dimension matrices with unique labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim: usize,
    matrices: Vec<CorrelationMatrix>,
}

impl Ensemble {
    /// Builds an ensemble, enforcing the shared dimension and unique labels.
    pub fn new(dim: usize, matrices: Vec<CorrelationMatrix>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(matrices.len());
        for m in &matrices {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
            }
            if seen.insert(m.label().to_owned(), ()).is_some() {
                return Err(Error::DuplicateLabel(m.label().to_owned()));
            }
        }
        Ok(Self { dim, matrices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of days N_D.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[CorrelationMatrix] {
        &self.matrices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CorrelationMatrix> {
        self.matrices.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.matrices.iter().map(|m| m.label())
    }
}

#[derive(Serialize, Deserialize)]
struct DayRecord {
    label: String,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    dim: usize,
    days: Vec<DayRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    metadata: Vec<(String, String)>,
}

fn is_json_path(path: &Path) -> bool {
    path.extension().map(|e| e.eq_ignore_ascii_case("json")).unwrap_or(false)
}

/// Writes an ensemble; format chosen by extension (`.json` → JSON, else CSV).
pub fn write_ensemble(path: impl AsRef<Path>, ensemble: &Ensemble) -> Result<()> {
    write_ensemble_with_metadata(path, ensemble, &[])
}

/// Writes an ensemble with embedded `key: value` metadata.
pub fn write_ensemble_with_metadata(
    path: impl AsRef<Path>,
    ensemble: &Ensemble,
    metadata: &[(String, String)],
) -> Result<()> {
    let path = path.as_ref();
    let text = if is_json_path(path) {
        render_ensemble_json(ensemble, metadata)?
    } else {
        render_ensemble_csv(ensemble, metadata)?
    };
    std::fs::write(path, text)?;
    Ok(())
}

fn render_ensemble_json(ensemble: &Ensemble, metadata: &[(String, String)]) -> Result<String> {
    let file = EnsembleFile {
        dim: ensemble.dim(),
        days: ensemble
            .iter()
            .map(|m| DayRecord { label: m.label().to_owned(), upper: m.upper() })
            .collect(),
        metadata: metadata.to_vec(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Format {
        path: "<render>".into(),
        msg: e.to_string(),
    })
}

fn render_ensemble_csv(ensemble: &Ensemble, metadata: &[(String, String)]) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# dim: {}", ensemble.dim());
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("label,i,j,value\n");
    for m in ensemble.iter() {
        if m.label().contains([',', '\n', '\r']) {
            return Err(Error::Format {
                path: "<render>".into(),
                msg: format!("label {:?} contains a CSV delimiter", m.label()),
            });
        }
        for i in 0..m.dim() {
            for j in (i + 1)..m.dim() {
                // `{}` on f64 prints the shortest representation that parses
                // back to the same bits, which is what makes round-trips exact.
                let _ = writeln!(out, "{},{},{},{}", m.label(), i, j, m.entry(i, j));
            }
        }
    }
    Ok(out)
}

/// Reads an ensemble written by [`write_ensemble`]; format sniffed from content.
pub fn read_ensemble(path: impl AsRef<Path>) -> Result<Ensemble> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let first = text.trim_start().chars().next();
    if first == Some('{') {
        parse_ensemble_json(&text, &path.display().to_string())
    } else {
        parse_ensemble_csv(&text, &path.display().to_string())
    }
}

fn parse_ensemble_json(text: &str, path: &str) -> Result<Ensemble> {
    let file: EnsembleFile = serde_json::from_str(text)
        .map_err(|e| Error::Format { path: path.into(), msg: e.to_string() })?;
    let dim = file.dim;
    if dim < 2 {
        return Err(Error::Format { path: path.into(), msg: format!("dim {dim} too small") });
    }
    let mut matrices = Vec::with_capacity(file.days.len());
    for day in file.days {
        matrices.push(CorrelationMatrix::from_upper(dim, &day.upper, day.label)?);
    }
    Ensemble::new(dim, matrices)
}

fn parse_ensemble_csv(text: &str, path: &str) -> Result<Ensemble> {
    let mut declared_dim: Option<usize> = None;
    let mut header_seen = false;
    // label -> (insertion order, sparse upper entries)
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(usize, usize, f64)>> = HashMap::new();
    let mut max_index = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once(':') {
                if k.trim() == "dim" {
                    let d = v.trim().parse::<usize>().map_err(|_| Error::Parse {
                        path: path.into(),
                        line: lineno + 1,
                        msg: format!("bad dim value {:?}", v.trim()),
                    })?;
                    declared_dim = Some(d);
                }
            }
            continue;
        }
        if !header_seen {
            if line != "label,i,j,value" {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("expected header `label,i,j,value`, got {line:?}"),
                });
            }
            header_seen = true;
            continue;
        }
        let mut parts = line.splitn(4, ',');
        let (label, i, j, value) = (parts.next(), parts.next(), parts.next(), parts.next());
        let (Some(label), Some(i), Some(j), Some(value)) = (label, i, j, value) else {
            return Err(Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: "expected 4 comma-separated fields".into(),
            });
        };
        let parse_idx = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("bad {what} index {s:?}"),
            })
        };
        let i = parse_idx(i, "row")?;
        let j = parse_idx(j, "column")?;
        let value: f64 = value.parse().map_err(|_| Error::Parse {
            path: path.into(),
            line: lineno + 1,
            msg: format!("bad value {value:?}"),
        })?;
        if i >= j {
            return Err(Error::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("expected strict upper triangle (i < j), got ({i},{j})"),
            });
        }
        max_index = max_index.max(j);
        if !rows.contains_key(label) {
            order.push(label.to_owned());
        }
        rows.entry(label.to_owned()).or_default().push((i, j, value));
    }

    if !header_seen && declared_dim.is_none() {
        return Err(Error::Format { path: path.into(), msg: "empty file with no `# dim:` line".into() });
    }
    let dim = match declared_dim {
        Some(d) => {
            if !order.is_empty() && max_index + 1 > d {
                return Err(Error::Format {
                    path: path.into(),
                    msg: format!("index {max_index} inconsistent with declared dim {d}"),
                });
            }
            d
        }
        None => {
            if order.is_empty() {
                return Err(Error::Format {
                    path: path.into(),
                    msg: "empty ensemble requires a `# dim:` line".into(),
                });
            }
            max_index + 1
        }
    };

    let expected = dim * (dim - 1) / 2;
    let mut matrices = Vec::with_capacity(order.len());
    for label in order {
        let entries = rows.remove(&label).unwrap();
        if entries.len() != expected {
            return Err(Error::Format {
                path: path.into(),
                msg: format!(
                    "label {label:?} has {} entries, expected D(D-1)/2 = {expected}",
                    entries.len()
                ),
            });
        }
        let mut upper = vec![f64::NAN; expected];
        for (i, j, v) in entries {
            let k = upper_index(dim, i, j);
            if !upper[k].is_nan() {
                return Err(Error::Format {
                    path: path.into(),
                    msg: format!("label {label:?} repeats entry ({i},{j})"),
                });
            }
            upper[k] = v;
        }
        matrices.push(CorrelationMatrix::from_upper(dim, &upper, label)?);
    }
    Ensemble::new(dim, matrices)
}

/// Position of (i,j), i < j, in the row-major strict upper triangle.
#[inline]
pub fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < dim);
    i * dim - i * (i + 1) / 2 + (j - i - 1)
}
