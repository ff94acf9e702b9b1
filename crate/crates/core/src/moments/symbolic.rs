//! Exact symbolic moments: the same Wick expansion as the numeric engine, but
//! with the one- and two-point kernels kept as formal sums of Kronecker-delta
//! patterns with rational-in-`D` coefficients. Index sums are carried out
//! exactly (`sum_i delta_ij -> 1` after merging, `sum_i 1 -> D`), producing a
//! [`MomentExpression`]: for every coupling monomial an exact rational
//! function of `D`, times `sqrt(D(D-1))` when the monomial has odd degree in
//! the linear coupling.
//!
//! Everything here is exact integer/rational arithmetic; floating point only
//! appears when a finished expression is evaluated at concrete parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::observables::GraphObservable;
use crate::rep::MIN_DIM;

use super::ModelParams;

/// Polynomial in the matrix dimension `D` with exact rational coefficients,
/// stored in ascending powers with no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolyD(Vec<BigRational>);

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl PolyD {
    pub fn zero() -> Self {
        PolyD(Vec::new())
    }

    pub fn one() -> Self {
        PolyD(vec![BigRational::one()])
    }

    /// Builds a polynomial from ascending integer coefficients.
    pub fn from_coeffs(coeffs: &[i64]) -> Self {
        PolyD(coeffs.iter().map(|&c| rat(c)).collect()).trimmed()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = vec![BigRational::zero(); self.0.len().max(other.0.len())];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        PolyD(out).trimmed()
    }

    fn neg(&self) -> Self {
        PolyD(self.0.iter().map(|c| -c).collect())
    }

    fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return PolyD::zero();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolyD(out).trimmed()
    }

    fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return PolyD::zero();
        }
        PolyD(self.0.iter().map(|x| x * c).collect())
    }

    /// Multiplies by `D^k`.
    fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return PolyD::zero();
        }
        let mut out = vec![BigRational::zero(); k];
        out.extend(self.0.iter().cloned());
        PolyD(out)
    }

    fn leading(&self) -> Option<&BigRational> {
        self.0.last()
    }

    fn monic(&self) -> Self {
        match self.leading() {
            None => PolyD::zero(),
            Some(l) => {
                let inv = l.recip();
                self.scale(&inv)
            }
        }
    }

    /// Remainder of `self / div` (`div` nonzero).
    fn rem(&self, div: &Self) -> Self {
        let mut r = self.clone();
        let dl = div.leading().expect("division by zero polynomial").clone();
        while !r.is_zero() && r.0.len() >= div.0.len() {
            let shift = r.0.len() - div.0.len();
            let factor = r.leading().unwrap() / &dl;
            for (i, c) in div.0.iter().enumerate() {
                let delta = c * &factor;
                r.0[shift + i] -= delta;
            }
            r = r.trimmed();
        }
        r
    }

    fn gcd(&self, other: &Self) -> Self {
        let mut a = self.monic();
        let mut b = other.monic();
        while !b.is_zero() {
            let r = a.rem(&b).monic();
            a = b;
            b = r;
        }
        if a.is_zero() {
            PolyD::one()
        } else {
            a
        }
    }

    /// Exact quotient; panics if the division has a remainder.
    fn exact_div(&self, div: &Self) -> Self {
        if self.is_zero() {
            return PolyD::zero();
        }
        let mut r = self.clone();
        let dl = div.leading().expect("division by zero polynomial").clone();
        let mut q = vec![BigRational::zero(); self.0.len() - div.0.len() + 1];
        while !r.is_zero() && r.0.len() >= div.0.len() {
            let shift = r.0.len() - div.0.len();
            let factor = r.leading().unwrap() / &dl;
            q[shift] = factor.clone();
            for (i, c) in div.0.iter().enumerate() {
                let delta = c * &factor;
                r.0[shift + i] -= delta;
            }
            r = r.trimmed();
        }
        assert!(r.is_zero(), "non-exact polynomial division");
        PolyD(q).trimmed()
    }

    pub fn eval(&self, d: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.0.iter().rev() {
            acc = acc * d + c;
        }
        acc
    }
}

impl fmt::Display for PolyD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (pow, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match pow {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if pow == 1 {
                        write!(f, "D")?;
                    } else {
                        write!(f, "D^{pow}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reduced rational function of `D`: numerator and monic denominator with no
/// common factor. Canonical, so structural equality is mathematical equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatFun {
    num: PolyD,
    den: PolyD,
}

impl RatFun {
    pub fn new(num: PolyD, den: PolyD) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RatFun { num: PolyD::zero(), den: PolyD::one() };
        }
        let g = num.gcd(&den);
        let mut num = num.exact_div(&g);
        let mut den = den.exact_div(&g);
        let lead = den.leading().unwrap().recip();
        num = num.scale(&lead);
        den = den.scale(&lead);
        RatFun { num, den }
    }

    /// Builds `num / den` from ascending integer coefficient lists.
    pub fn fraction(num: &[i64], den: &[i64]) -> Self {
        RatFun::new(PolyD::from_coeffs(num), PolyD::from_coeffs(den))
    }

    pub fn from_poly(num: PolyD) -> Self {
        RatFun::new(num, PolyD::one())
    }

    pub fn integer(n: i64) -> Self {
        RatFun::from_poly(PolyD::from_coeffs(&[n]))
    }

    pub fn zero() -> Self {
        RatFun { num: PolyD::zero(), den: PolyD::one() }
    }

    pub fn one() -> Self {
        RatFun { num: PolyD::one(), den: PolyD::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn num(&self) -> &PolyD {
        &self.num
    }

    pub fn den(&self) -> &PolyD {
        &self.den
    }

    pub fn add(&self, other: &Self) -> Self {
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        RatFun::new(num, self.den.mul(&other.den))
    }

    pub fn mul(&self, other: &Self) -> Self {
        RatFun::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero rational function");
        RatFun::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    /// Exact evaluation at integer `D`, converted to `f64` at the end.
    pub fn eval_f64(&self, dim: usize) -> f64 {
        let d = BigRational::from_integer(BigInt::from(dim));
        let num = self.num.eval(&d);
        let den = self.den.eval(&d);
        (num / den).to_f64().expect("rational fits in f64")
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == PolyD::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

/// Coefficient with a denominator kept as explicit powers of the only factors
/// the kernels produce (`2`, `D`, `D-1`, `D-2`): addition never needs a
/// polynomial gcd, which keeps the expansion hot path cheap.
#[derive(Debug, Clone, PartialEq)]
struct Frac {
    num: PolyD,
    two: u32,
    d: u32,
    d1: u32,
    d2: u32,
}

impl Frac {
    fn from_num(num: PolyD) -> Self {
        Frac { num, two: 0, d: 0, d1: 0, d2: 0 }
    }

    fn int(n: i64) -> Self {
        Frac::from_num(PolyD::from_coeffs(&[n]))
    }

    /// `num / (2^two * D^d * (D-1)^d1 * (D-2)^d2)` with integer numerator
    /// coefficients.
    fn over(num: &[i64], two: u32, d: u32, d1: u32, d2: u32) -> Self {
        Frac { num: PolyD::from_coeffs(num), two, d, d1, d2 }
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn mul(&self, other: &Self) -> Self {
        Frac {
            num: self.num.mul(&other.num),
            two: self.two + other.two,
            d: self.d + other.d,
            d1: self.d1 + other.d1,
            d2: self.d2 + other.d2,
        }
    }

    fn add(&self, other: &Self) -> Self {
        let two = self.two.max(other.two);
        let d = self.d.max(other.d);
        let d1 = self.d1.max(other.d1);
        let d2 = self.d2.max(other.d2);
        let lift = |f: &Frac| -> PolyD {
            let mut num = f.num.shift((d - f.d) as usize);
            let pow2 = BigRational::from_integer(BigInt::from(2).pow(two - f.two));
            num = num.scale(&pow2);
            for _ in 0..(d1 - f.d1) {
                num = num.mul(&PolyD::from_coeffs(&[-1, 1]));
            }
            for _ in 0..(d2 - f.d2) {
                num = num.mul(&PolyD::from_coeffs(&[-2, 1]));
            }
            num
        };
        Frac { num: lift(self).add(&lift(other)), two, d, d1, d2 }
    }

    fn neg(&self) -> Self {
        Frac { num: self.num.neg(), ..self.clone() }
    }
}

/// Formal sum of Kronecker-delta patterns over a fixed set of index symbols.
///
/// Each term is a partition of the symbols (indices within the same block are
/// forced equal by deltas; separate blocks carry no constraint) together with
/// a rational-in-`D` coefficient. Terms are kept canonical, merged patterns
/// combined, so the map itself is a normal form.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaPoly {
    universe: Vec<u32>,
    terms: BTreeMap<Vec<u8>, Frac>,
}

impl DeltaPoly {
    /// The constant 1: a single term with every index in its own block.
    pub fn one(universe: &[u32]) -> Self {
        let mut universe = universe.to_vec();
        universe.sort_unstable();
        let rgs: Vec<u8> = (0..universe.len() as u8).collect();
        let mut terms = BTreeMap::new();
        terms.insert(rgs, Frac::int(1));
        DeltaPoly { universe, terms }
    }

    pub fn zero(universe: &[u32]) -> Self {
        let mut universe = universe.to_vec();
        universe.sort_unstable();
        DeltaPoly { universe, terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// `delta_{ab}`; the diagonal case `a == b` is the constant 1.
    pub fn delta(universe: &[u32], a: u32, b: u32) -> Self {
        let mut dp = DeltaPoly::one(universe);
        if a == b {
            return dp;
        }
        let (terms, uni) = (std::mem::take(&mut dp.terms), &dp.universe);
        let mut merged = BTreeMap::new();
        for (rgs, coeff) in terms {
            let pa = uni.binary_search(&a).expect("symbol in universe");
            let pb = uni.binary_search(&b).expect("symbol in universe");
            let mut labels: Vec<usize> = rgs.iter().map(|&x| x as usize).collect();
            let merge_to = labels[pa].min(labels[pb]);
            let merge_from = labels[pa].max(labels[pb]);
            for l in labels.iter_mut() {
                if *l == merge_from {
                    *l = merge_to;
                }
            }
            merged.insert(canonical_rgs(&labels), coeff);
        }
        dp.terms = merged;
        dp
    }

    fn map_insert(terms: &mut BTreeMap<Vec<u8>, Frac>, key: Vec<u8>, coeff: Frac) {
        use std::collections::btree_map::Entry;
        match terms.entry(key) {
            Entry::Vacant(v) => {
                if !coeff.is_zero() {
                    v.insert(coeff);
                }
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().add(&coeff);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn scale(mut self, c: &Frac) -> Self {
        if c.is_zero() {
            self.terms.clear();
            return self;
        }
        let terms = std::mem::take(&mut self.terms);
        for (key, coeff) in terms {
            let prod = coeff.mul(c);
            if !prod.is_zero() {
                self.terms.insert(key, prod);
            }
        }
        self
    }

    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.universe, other.universe, "universe mismatch");
        let mut out = self.clone();
        for (key, coeff) in &other.terms {
            Self::map_insert(&mut out.terms, key.clone(), coeff.clone());
        }
        out
    }

    fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.universe, other.universe, "universe mismatch");
        let mut out = self.clone();
        for (key, coeff) in &other.terms {
            Self::map_insert(&mut out.terms, key.clone(), coeff.neg());
        }
        out
    }

    fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.universe, other.universe, "universe mismatch");
        let n = self.universe.len();
        let mut out = DeltaPoly::zero(&self.universe);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                // join of two partitions: union blocks that overlap
                let mut uf = UnionFind::new(n);
                for key in [ka, kb] {
                    let mut first_of_label = vec![usize::MAX; n];
                    for (pos, &label) in key.iter().enumerate() {
                        let l = label as usize;
                        if first_of_label[l] == usize::MAX {
                            first_of_label[l] = pos;
                        } else {
                            uf.union(first_of_label[l], pos);
                        }
                    }
                }
                let labels: Vec<usize> = (0..n).map(|p| uf.find(p)).collect();
                Self::map_insert(&mut out.terms, canonical_rgs(&labels), ca.mul(cb));
            }
        }
        out
    }

    /// Sums over one index of range `D`: a singleton block contributes a free
    /// factor of `D`; otherwise the index merely drops out of its block.
    pub fn sum_out(&self, symbol: u32) -> Self {
        let pos = self.universe.binary_search(&symbol).expect("symbol in universe");
        let universe: Vec<u32> =
            self.universe.iter().copied().filter(|&s| s != symbol).collect();
        let mut out = DeltaPoly::zero(&universe);
        for (rgs, coeff) in &self.terms {
            let label = rgs[pos];
            let singleton = rgs.iter().filter(|&&l| l == label).count() == 1;
            let labels: Vec<usize> = rgs
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != pos)
                .map(|(_, &l)| l as usize)
                .collect();
            let coeff = if singleton {
                Frac { num: coeff.num.shift(1), ..coeff.clone() }
            } else {
                coeff.clone()
            };
            Self::map_insert(&mut out.terms, canonical_rgs(&labels), coeff);
        }
        out
    }

    /// Sums over all remaining indices: each term contributes
    /// `coefficient * D^{number of blocks}`.
    pub fn sum_all(&self) -> RatFun {
        let mut acc = Frac::int(0);
        for (rgs, coeff) in &self.terms {
            let blocks = rgs.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
            acc = acc.add(&Frac { num: coeff.num.shift(blocks), ..coeff.clone() });
        }
        frac_to_ratfun(&acc)
    }

    /// Maps the symbols of this polynomial onto (possibly coinciding) symbols
    /// of a larger universe; symbols of the target universe that are not hit
    /// stay unconstrained singletons.
    pub fn instantiate(&self, targets: &[u32], universe: &[u32]) -> Self {
        assert_eq!(targets.len(), self.universe.len(), "one target per symbol");
        let mut uni = universe.to_vec();
        uni.sort_unstable();
        let n = uni.len();
        let target_pos: Vec<usize> = targets
            .iter()
            .map(|t| uni.binary_search(t).expect("target in universe"))
            .collect();
        let mut out = DeltaPoly::zero(&uni);
        for (rgs, coeff) in &self.terms {
            let mut uf = UnionFind::new(n);
            let mut first_of_label = vec![usize::MAX; rgs.len()];
            for (pos, &label) in rgs.iter().enumerate() {
                let l = label as usize;
                if first_of_label[l] == usize::MAX {
                    first_of_label[l] = pos;
                } else {
                    uf.union(target_pos[first_of_label[l]], target_pos[pos]);
                }
            }
            let labels: Vec<usize> = (0..n).map(|p| uf.find(p)).collect();
            Self::map_insert(&mut out.terms, canonical_rgs(&labels), coeff.clone());
        }
        out
    }

    /// Numeric value at a concrete index assignment: a term applies when each
    /// of its blocks is constant on the assigned values.
    #[cfg(test)]
    fn eval_at(&self, values: &[usize], dim: usize) -> f64 {
        assert_eq!(values.len(), self.universe.len());
        let mut total = 0.0;
        'terms: for (rgs, coeff) in &self.terms {
            let blocks = rgs.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
            for b in 0..blocks {
                let mut value = None;
                for (pos, &l) in rgs.iter().enumerate() {
                    if l as usize == b {
                        match value {
                            None => value = Some(values[pos]),
                            Some(v) if v == values[pos] => {}
                            Some(_) => continue 'terms,
                        }
                    }
                }
            }
            total += frac_to_ratfun(coeff).eval_f64(dim);
        }
        total
    }
}

fn frac_to_ratfun(f: &Frac) -> RatFun {
    let mut den = PolyD::from_coeffs(&[1])
        .scale(&BigRational::from_integer(BigInt::from(2).pow(f.two)));
    den = den.shift(f.d as usize);
    for _ in 0..f.d1 {
        den = den.mul(&PolyD::from_coeffs(&[-1, 1]));
    }
    for _ in 0..f.d2 {
        den = den.mul(&PolyD::from_coeffs(&[-2, 1]));
    }
    RatFun::new(f.num.clone(), den)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Rewrites arbitrary block labels as a restricted-growth string (labels in
/// first-appearance order), the canonical form of a set partition.
fn canonical_rgs(labels: &[usize]) -> Vec<u8> {
    let mut map: BTreeMap<usize, u8> = BTreeMap::new();
    let mut next = 0u8;
    labels
        .iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// Monomial in the couplings: `mu_tilde^mu / (tau_v0^t_v0 tau_vh^t_vh tau_v2^t_v2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CouplingMono {
    pub mu: u8,
    pub t_v0: u8,
    pub t_vh: u8,
    pub t_v2: u8,
}

impl fmt::Display for CouplingMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (name, pow, inverse) in [
            ("mu", self.mu, false),
            ("tau_v0", self.t_v0, true),
            ("tau_vh", self.t_vh, true),
            ("tau_v2", self.t_v2, true),
        ] {
            if pow == 0 {
                continue;
            }
            if wrote {
                write!(f, " ")?;
            }
            wrote = true;
            let sign = if inverse { "-" } else { "" };
            write!(f, "{name}^{sign}{pow}")?;
        }
        if !wrote {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// An expectation value as an exact function of `D` and the couplings: a sum
/// of coupling monomials, each multiplied by a reduced rational function of
/// `D`, and by `sqrt(D(D-1))` whenever the monomial is odd in `mu_tilde`
/// (odd-degree observables carry exactly one half-integer power).
///
/// The representation is canonical, so equality of values is structural
/// equality of expressions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MomentExpression {
    terms: BTreeMap<CouplingMono, RatFun>,
}

impl MomentExpression {
    pub fn with_terms(terms: Vec<(CouplingMono, RatFun)>) -> Self {
        let mut expr = MomentExpression::default();
        for (mono, rf) in terms {
            expr.add_term(mono, rf);
        }
        expr
    }

    pub fn add_term(&mut self, mono: CouplingMono, rf: RatFun) {
        use std::collections::btree_map::Entry;
        if rf.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(rf);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().add(&rf);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CouplingMono, &RatFun)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluates at concrete couplings and dimension.
    pub fn evaluate(&self, params: &ModelParams, dim: usize) -> Result<f64> {
        if dim < MIN_DIM {
            return Err(Error::DimensionTooSmall { got: dim, min: MIN_DIM });
        }
        let d = dim as f64;
        let half = (d * (d - 1.0)).sqrt();
        let [t0, th, t2] = params.inv_taus();
        let mut total = 0.0;
        for (mono, rf) in &self.terms {
            let mut value = rf.eval_f64(dim)
                * params.mu_tilde_v0().powi(mono.mu as i32)
                * t0.powi(mono.t_v0 as i32)
                * th.powi(mono.t_vh as i32)
                * t2.powi(mono.t_v2 as i32);
            if mono.mu % 2 == 1 {
                value *= half;
            }
            total += value;
        }
        Ok(total)
    }
}

impl fmt::Display for MomentExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (mono, rf)) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{mono}: {rf}")?;
            if mono.mu % 2 == 1 {
                write!(f, " * sqrt(D(D-1))")?;
            }
        }
        Ok(())
    }
}

struct Kernels {
    mean: DeltaPoly,
    cov: [DeltaPoly; 3],
}

fn kernels() -> &'static Kernels {
    static KERNELS: OnceLock<Kernels> = OnceLock::new();
    KERNELS.get_or_init(build_kernels)
}

/// One- and two-point kernels as delta polynomials, transcribed from the
/// block-projector forms with `F(i,j) = delta_ij - 1/D`.
fn build_kernels() -> Kernels {
    // mean factor: mu_tilde / sqrt(D(D-1)) * [(D-1)/D - F_ij]; the delta part
    // reduces exactly to 1 - delta_ij. The 1/sqrt(D(D-1)) is tracked by the
    // monomial's mu-parity, not here.
    let u2 = [0u32, 1];
    let mean = DeltaPoly::one(&u2)
        .scale(&Frac::over(&[-1, 1], 0, 1, 0, 0))
        .sub(&f_poly(&u2, 0, 1));

    let u4 = [0u32, 1, 2, 3];
    let (i, j, k, l) = (0u32, 1, 2, 3);
    let f = |a, b| f_poly(&u4, a, b);

    // 1/tau_v0 block: (F_ij F_kl / (D-1) - (F_ij + F_kl)/D + (D-1)/D^2) / D
    let v0 = f(i, j)
        .mul(&f(k, l))
        .scale(&Frac::over(&[1], 0, 1, 1, 0))
        .add(&f(i, j).add(&f(k, l)).scale(&Frac::over(&[-1], 0, 2, 0, 0)))
        .add(&DeltaPoly::one(&u4).scale(&Frac::over(&[-1, 1], 0, 3, 0, 0)));

    // 1/tau_vh block: (1-d_ij)(1-d_kl)(F_ik + F_jk + F_il + F_jl) / (2(D-2))
    let off_ij = DeltaPoly::one(&u4).sub(&DeltaPoly::delta(&u4, i, j));
    let off_kl = DeltaPoly::one(&u4).sub(&DeltaPoly::delta(&u4, k, l));
    let vh = off_ij
        .mul(&off_kl)
        .mul(&f(i, k).add(&f(j, k)).add(&f(i, l)).add(&f(j, l)))
        .scale(&Frac::over(&[1], 1, 0, 0, 1));

    // 1/tau_v2 block:
    //   (F_ik F_jl + F_il F_jk)/2 - F_ij F_kl/(D-1)
    //   - D/(D-2) * sum_pq F_ip F_jp F_kq F_lq F_pq
    let u6 = [0u32, 1, 2, 3, 4, 5];
    let (p, q) = (4u32, 5);
    let f6 = |a, b| f_poly(&u6, a, b);
    let star = f6(i, p)
        .mul(&f6(j, p))
        .mul(&f6(k, q))
        .mul(&f6(l, q))
        .mul(&f6(p, q))
        .sum_out(p)
        .sum_out(q);
    let v2 = f(i, k)
        .mul(&f(j, l))
        .add(&f(i, l).mul(&f(j, k)))
        .scale(&Frac::over(&[1], 1, 0, 0, 0))
        .add(&f(i, j).mul(&f(k, l)).scale(&Frac::over(&[-1], 0, 0, 1, 0)))
        .add(&star.scale(&Frac::over(&[0, -1], 0, 0, 0, 1)));

    Kernels { mean, cov: [v0, vh, v2] }
}

fn f_poly(universe: &[u32], a: u32, b: u32) -> DeltaPoly {
    DeltaPoly::delta(universe, a, b)
        .add(&DeltaPoly::one(universe).scale(&Frac::over(&[-1], 0, 1, 0, 0)))
}

/// All ways to split factors `0..k` into unordered pairs plus singletons.
fn wick_structures(k: usize) -> Vec<(Vec<(usize, usize)>, Vec<usize>)> {
    fn go(
        remaining: &[usize],
        pairs: &mut Vec<(usize, usize)>,
        singles: &mut Vec<usize>,
        out: &mut Vec<(Vec<(usize, usize)>, Vec<usize>)>,
    ) {
        let Some((&first, rest)) = remaining.split_first() else {
            out.push((pairs.clone(), singles.clone()));
            return;
        };
        singles.push(first);
        go(rest, pairs, singles, out);
        singles.pop();
        for (idx, &second) in rest.iter().enumerate() {
            let mut next: Vec<usize> = rest.to_vec();
            next.remove(idx);
            pairs.push((first, second));
            go(&next, pairs, singles, out);
            pairs.pop();
        }
    }
    let items: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    go(&items, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Exact expectation of a graph observable as a [`MomentExpression`].
///
/// Runs the same pairing-plus-singleton expansion as the numeric engine, but
/// multiplies out kernel delta polynomials over the graph vertices and then
/// sums every vertex index symbolically.
pub fn symbolic_expectation(obs: &GraphObservable) -> Result<MomentExpression> {
    let k = obs.degree();
    if k > 4 {
        return Err(Error::UnsupportedDegree { got: k, max: 4 });
    }
    let universe: Vec<u32> = (0..obs.vertex_count as u32).collect();
    let kernels = kernels();
    let edge = |t: usize| {
        let (a, b) = obs.edges[t];
        (a as u32, b as u32)
    };
    let dd1 = RatFun::fraction(&[1], &[0, -1, 1]); // 1 / (D(D-1))

    let mut expr = MomentExpression::default();
    for (pairs, singles) in wick_structures(k) {
        let mut base = DeltaPoly::one(&universe);
        for &s in &singles {
            let (a, b) = edge(s);
            base = base.mul(&kernels.mean.instantiate(&[a, b], &universe));
        }
        for choice in 0..3usize.pow(pairs.len() as u32) {
            let mut mono = CouplingMono {
                mu: singles.len() as u8,
                t_v0: 0,
                t_vh: 0,
                t_v2: 0,
            };
            let mut dp = base.clone();
            let mut code = choice;
            for &(x, y) in &pairs {
                let piece = code % 3;
                code /= 3;
                match piece {
                    0 => mono.t_v0 += 1,
                    1 => mono.t_vh += 1,
                    _ => mono.t_v2 += 1,
                }
                let (a, b) = edge(x);
                let (c, d) = edge(y);
                dp = dp.mul(&kernels.cov[piece].instantiate(&[a, b, c, d], &universe));
            }
            let raw = dp.sum_all();
            // every mean factor carries (D(D-1))^{-1/2}; the odd half-power
            // is the expression's sqrt convention, the rest divides out here
            let p = singles.len();
            let mut conv = raw;
            for _ in 0..(p + p % 2) / 2 {
                conv = conv.mul(&dd1);
            }
            expr.add_term(mono, conv);
        }
    }
    Ok(expr)
}
