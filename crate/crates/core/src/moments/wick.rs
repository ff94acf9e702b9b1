//! Wick-theorem evaluation of graph-observable moments.
//!
//! For an observable `O = sum_{v_1..v_n} prod_e M_{v_a v_b}` the unrestricted
//! index sums are organized by coincidence pattern: every set partition of the
//! graph vertices stands for one way the summed indices can coincide, carries
//! multiplicity `D(D-1)...(D-#blocks+1)` (injective assignments of blocks to
//! index values), and contributes the Gaussian moment of its entry factors.
//! That moment is the Isserlis expansion over pairings-plus-singletons of the
//! pattern mean and the three pattern covariances.
//!
//! Connected components consisting of a single edge are peeled off first: such
//! a factor sums to the grand total `T = sum M_ij`, which is itself Gaussian
//! and jointly Gaussian with the remaining entries, so it joins the Isserlis
//! expansion as one extra variable instead of two extra summed vertices. This
//! is exact and keeps the worst product moment (a pair of two-path-squared
//! graphs) at Bell(12) ~ 4.2e6 partitions instead of Bell(16) ~ 1e10.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::observables::GraphObservable;

use super::{pattern_moments, ModelParams, PatternMoments};

/// Default ceiling on the number of set partitions one moment may enumerate.
pub const DEFAULT_COST_BUDGET: u64 = 10_000_000;

/// Largest degree accepted for a single observable.
const MAX_DEGREE: usize = 4;
/// Largest number of Gaussian factors in one moment (octic products).
const MAX_FACTORS: usize = 8;

// Bell numbers B_0..B_16: a priori partition count for an n-vertex moment.
const BELL: [u128; 17] = [
    1,
    1,
    2,
    5,
    15,
    52,
    203,
    877,
    4140,
    21147,
    115975,
    678570,
    4213597,
    27644437,
    190899322,
    1382958545,
    10480142147,
];

// Involution numbers I_0..I_10: expected Isserlis term counts per factor count.
const INVOLUTIONS: [u64; 11] = [1, 1, 2, 4, 10, 26, 76, 232, 764, 2620, 9496];

/// Expectation of a graph observable under the model.
///
/// Exact up to floating-point evaluation; cost is independent of `D`.
pub fn expectation(obs: &GraphObservable, params: &ModelParams, dim: usize) -> Result<f64> {
    if obs.degree() > MAX_DEGREE {
        return Err(Error::UnsupportedDegree { got: obs.degree(), max: MAX_DEGREE });
    }
    let pm = pattern_moments(params, dim)?;
    let split = split_single_edges(&obs.edges, obs.vertex_count);
    // Degree <= 4 means at most 8 vertices, far below any sensible budget.
    graph_moment(&split, &pm, DEFAULT_COST_BUDGET)
}

/// Expectation of the product of two graph observables, `<O_a O_b>`.
///
/// The product of degree-4 observables is an octic moment; its partition count
/// is checked against `budget` before enumeration and
/// [`Error::CostBudgetExceeded`] reports the required size if it does not fit.
pub fn product_expectation(
    a: &GraphObservable,
    b: &GraphObservable,
    params: &ModelParams,
    dim: usize,
    budget: u64,
) -> Result<f64> {
    let got = a.degree() + b.degree();
    if got > MAX_FACTORS {
        return Err(Error::UnsupportedDegree { got, max: MAX_FACTORS });
    }
    let pm = pattern_moments(params, dim)?;
    let mut edges = a.edges.clone();
    edges.extend(b.edges.iter().map(|&(x, y)| (x + a.vertex_count, y + a.vertex_count)));
    let split = split_single_edges(&edges, a.vertex_count + b.vertex_count);
    graph_moment(&split, &pm, budget)
}

/// A graph prepared for enumeration: multi-edge components compacted to the
/// left, single-edge components counted as grand-total factors, and isolated
/// vertices reduced to a free power of `D`.
struct SplitGraph {
    edges: Vec<(usize, usize)>,
    vertex_count: usize,
    totals: usize,
    free_vertices: usize,
}

fn split_single_edges(edges: &[(usize, usize)], nvert: usize) -> SplitGraph {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut parent: Vec<usize> = (0..nvert).collect();
    for &(a, b) in edges {
        debug_assert_ne!(a, b, "loopless graphs only");
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut edges_in = vec![0usize; nvert];
    for &(a, _) in edges {
        edges_in[find(&mut parent, a)] += 1;
    }

    let mut totals = 0;
    let mut free_vertices = 0;
    let mut new_id = vec![usize::MAX; nvert];
    let mut kept = 0;
    for v in 0..nvert {
        let root = find(&mut parent, v);
        match edges_in[root] {
            0 => free_vertices += 1,
            1 => {
                if root == v {
                    totals += 1;
                }
            }
            _ => {
                new_id[v] = kept;
                kept += 1;
            }
        }
    }
    let kept_edges = edges
        .iter()
        .filter(|&&(a, _)| new_id[a] != usize::MAX)
        .map(|&(a, b)| (new_id[a], new_id[b]))
        .collect();

    SplitGraph { edges: kept_edges, vertex_count: kept, totals, free_vertices }
}

fn graph_moment(graph: &SplitGraph, pm: &PatternMoments, budget: u64) -> Result<f64> {
    let nvert = graph.vertex_count;
    debug_assert!(nvert < BELL.len());
    debug_assert!(graph.edges.len() + graph.totals <= MAX_FACTORS);
    let required = BELL[nvert];
    if required > u128::from(budget) {
        return Err(Error::CostBudgetExceeded { required, budget });
    }

    let d = pm.dim() as f64;
    // falling[b] = D (D-1) ... (D-b+1); zero once b exceeds D
    let mut falling = vec![1.0; nvert + 1];
    for b in 1..=nvert {
        falling[b] = falling[b - 1] * (d - (b as f64 - 1.0));
    }
    // neighbours with a smaller vertex id, for pruning coincident endpoints
    let mut adj = vec![Vec::new(); nvert];
    for &(a, b) in &graph.edges {
        adj[a.max(b)].push(a.min(b));
    }

    let mut enumeration = Enumeration {
        edges: &graph.edges,
        adj,
        assign: vec![0; nvert],
        falling,
        covs: [pm.cov_disjoint(), pm.cov_share1(), pm.var()],
        mbar: pm.mbar(),
        totals: graph.totals,
        total_mean: pm.mean_total(),
        total_cov: pm.cov_total_entry(),
        total_var: pm.var_total(),
        cache: HashMap::new(),
        edge_blocks: vec![(0, 0); graph.edges.len()],
        sum: 0.0,
    };
    enumeration.recurse(0, 0);
    Ok(enumeration.sum * d.powi(graph.free_vertices as i32))
}

struct Enumeration<'a> {
    edges: &'a [(usize, usize)],
    adj: Vec<Vec<usize>>,
    assign: Vec<usize>,
    falling: Vec<f64>,
    covs: [f64; 3],
    mbar: f64,
    totals: usize,
    total_mean: f64,
    total_cov: f64,
    total_var: f64,
    // Isserlis value per block-overlap pattern of the edge factors; the
    // pattern is two bits per unordered factor pair (<= 28 pairs in a u64).
    cache: HashMap<u64, f64>,
    edge_blocks: Vec<(usize, usize)>,
    sum: f64,
}

impl Enumeration<'_> {
    fn recurse(&mut self, v: usize, nblocks: usize) {
        if v == self.assign.len() {
            self.emit(nblocks);
            return;
        }
        for b in 0..=nblocks {
            // a block holding both endpoints of an edge indexes the zero
            // diagonal, so the whole subtree vanishes
            if b < nblocks && self.adj[v].iter().any(|&u| self.assign[u] == b) {
                continue;
            }
            self.assign[v] = b;
            self.recurse(v + 1, nblocks.max(b + 1));
        }
    }

    fn emit(&mut self, nblocks: usize) {
        let multiplicity = self.falling[nblocks];
        if multiplicity == 0.0 {
            return;
        }
        let k = self.edges.len();
        for (t, &(a, b)) in self.edges.iter().enumerate() {
            self.edge_blocks[t] = (self.assign[a], self.assign[b]);
        }
        let mut key = 0u64;
        let mut shift = 0;
        for e in 0..k {
            for f in (e + 1)..k {
                key |= (pair_overlap(self.edge_blocks[e], self.edge_blocks[f]) as u64) << shift;
                shift += 2;
            }
        }
        let value = if let Some(&v) = self.cache.get(&key) {
            v
        } else {
            let v = self.pattern_isserlis();
            self.cache.insert(key, v);
            v
        };
        self.sum += multiplicity * value;
    }

    fn pattern_isserlis(&self) -> f64 {
        let k = self.edges.len();
        let blocks = &self.edge_blocks[..k];
        isserlis(k + self.totals, |x, y| match (x < k, y < k) {
            (true, true) => self.covs[pair_overlap(blocks[x], blocks[y])],
            (false, false) => self.total_var,
            _ => self.total_cov,
        }, |x| if x < k { self.mbar } else { self.total_mean })
    }
}

/// Shared-index count of two unordered pairs with distinct members each.
fn pair_overlap((a, b): (usize, usize), (c, d): (usize, usize)) -> usize {
    (a == c || a == d) as usize + (b == c || b == d) as usize
}

/// Gaussian moment of `n` jointly Gaussian factors from their means and
/// covariances: sum over all pairings-plus-singletons.
fn isserlis(n: usize, cov: impl Fn(usize, usize) -> f64, mean: impl Fn(usize) -> f64) -> f64 {
    debug_assert!(n <= 16);
    let mut terms = 0u64;
    let value = isserlis_rec((1u32 << n) - 1, &cov, &mean, &mut terms);
    debug_assert_eq!(terms, INVOLUTIONS[n], "pairing-plus-singleton count for n={n}");
    value
}

fn isserlis_rec(
    mask: u32,
    cov: &impl Fn(usize, usize) -> f64,
    mean: &impl Fn(usize) -> f64,
    terms: &mut u64,
) -> f64 {
    if mask == 0 {
        *terms += 1;
        return 1.0;
    }
    let first = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << first);
    // factor `first` stays unpaired ...
    let mut acc = mean(first) * isserlis_rec(rest, cov, mean, terms);
    // ... or pairs with any later factor
    let mut others = rest;
    while others != 0 {
        let second = others.trailing_zeros() as usize;
        others &= others - 1;
        acc += cov(first, second) * isserlis_rec(rest & !(1 << second), cov, mean, terms);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::pattern_moments;
    use crate::observables::{catalog, graph, ObservableId};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(mu: f64, t0: f64, th: f64, t2: f64) -> ModelParams {
        ModelParams::new(mu, t0, th, t2).unwrap()
    }

    fn custom(edges: Vec<(usize, usize)>, vertex_count: usize) -> GraphObservable {
        GraphObservable { id: ObservableId::O1, edges, vertex_count }
    }

    #[test]
    fn isserlis_scalar_moments() {
        // all factors the same N(m, s^2) variable
        let (m, s2) = (0.7, 1.3);
        let one = |n: usize| isserlis(n, |_, _| s2, |_| m);
        assert_abs_diff_eq!(one(0), 1.0);
        assert_abs_diff_eq!(one(1), m, epsilon = 1e-15);
        assert_abs_diff_eq!(one(2), m * m + s2, epsilon = 1e-15);
        assert_abs_diff_eq!(one(3), m.powi(3) + 3.0 * m * s2, epsilon = 1e-14);
        assert_abs_diff_eq!(
            one(4),
            m.powi(4) + 6.0 * m * m * s2 + 3.0 * s2 * s2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn isserlis_term_counts() {
        // 3 factors: 3 pair-singleton structures + 1 all-singleton = 4
        // 4 factors: 3 pairings + 6 pair-plus-two-singletons + 1 = 10
        for (n, want) in [(3u32, 4u64), (4, 10), (8, 764)] {
            let mut terms = 0u64;
            isserlis_rec((1 << n) - 1, &|_, _| 1.0, &|_| 1.0, &mut terms);
            assert_eq!(terms, want);
        }
    }

    #[test]
    fn split_peels_single_edges_and_free_vertices() {
        // triangle + lone edge + isolated vertex
        let split = split_single_edges(&[(0, 1), (1, 2), (2, 0), (3, 4)], 6);
        assert_eq!(split.edges.len(), 3);
        assert_eq!(split.vertex_count, 3);
        assert_eq!(split.totals, 1);
        assert_eq!(split.free_vertices, 1);

        // a doubled edge is quadratic in one entry and must not be peeled
        let split = split_single_edges(&[(0, 1), (0, 1)], 2);
        assert_eq!(split.edges.len(), 2);
        assert_eq!(split.totals, 0);
    }

    /// Brute-force oracle: sums the Gaussian moment entry pattern by entry
    /// pattern over every concrete index tuple. No partitions, multiplicity
    /// counting, peeling or caching involved.
    fn oracle_moment(edges: &[(usize, usize)], nvert: usize, pm: &PatternMoments) -> f64 {
        let d = pm.dim();
        let covs = [pm.cov_disjoint(), pm.cov_share1(), pm.var()];
        let mut tuple = vec![0usize; nvert];
        let mut pairs = vec![(0usize, 0usize); edges.len()];
        let mut sum = 0.0;
        'outer: loop {
            let mut on_diagonal = false;
            for (t, &(a, b)) in edges.iter().enumerate() {
                pairs[t] = (tuple[a], tuple[b]);
                on_diagonal |= tuple[a] == tuple[b];
            }
            if !on_diagonal {
                sum += isserlis(
                    edges.len(),
                    |x, y| covs[pair_overlap(pairs[x], pairs[y])],
                    |_| pm.mbar(),
                );
            }
            for slot in tuple.iter_mut() {
                *slot += 1;
                if *slot < d {
                    continue 'outer;
                }
                *slot = 0;
            }
            return sum;
        }
    }

    #[test]
    fn engine_matches_tuple_oracle() {
        let p = params(0.6, 2.5, 4.0, 0.6);
        for dim in [4, 5] {
            let pm = pattern_moments(&p, dim).unwrap();
            for obs in catalog() {
                let want = oracle_moment(&obs.edges, obs.vertex_count, &pm);
                let got = expectation(obs, &p, dim).unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-9, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn quadratic_closed_forms() {
        let p = params(1.1, 0.8, 2.0, 5.0);
        for dim in [4, 7, 19] {
            let pm = pattern_moments(&p, dim).unwrap();
            let d = dim as f64;
            let n = d * (d - 1.0);

            let lin = expectation(graph(ObservableId::LIN), &p, dim).unwrap();
            assert_relative_eq!(lin, n * pm.mbar(), max_relative = 1e-12);

            let q1 = expectation(graph(ObservableId::Q1), &p, dim).unwrap();
            assert_relative_eq!(
                q1,
                n * (pm.var() + pm.mbar() * pm.mbar()),
                max_relative = 1e-12
            );

            // Var(r_j) = (D-1) var + (D-1)(D-2) cov_share1, E r_j = (D-1) mbar
            let q2 = expectation(graph(ObservableId::Q2), &p, dim).unwrap();
            let var_row = (d - 1.0) * pm.var() + (d - 1.0) * (d - 2.0) * pm.cov_share1();
            let mean_row = (d - 1.0) * pm.mbar();
            assert_relative_eq!(
                q2,
                d * (var_row + mean_row * mean_row),
                max_relative = 1e-12
            );

            let q3 = expectation(graph(ObservableId::Q3), &p, dim).unwrap();
            let mean_total = pm.mean_total();
            assert_relative_eq!(
                q3,
                pm.var_total() + mean_total * mean_total,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn entry_cube_sum_hand_value() {
        // D=4, unit couplings: each off-diagonal entry is N(1/sqrt(12), 1/2),
        // so the cube sum is 12 (mbar^3 + 3 mbar/2) = 19/sqrt(12).
        let p = params(1.0, 1.0, 1.0, 1.0);
        let got = expectation(graph(ObservableId::O1), &p, 4).unwrap();
        assert_relative_eq!(got, 19.0 / 12f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn odd_observables_vanish_at_zero_mean() {
        let p = params(0.0, 0.8, 1.7, 0.4);
        for obs in catalog() {
            if obs.degree() % 2 == 1 {
                let got = expectation(obs, &p, 6).unwrap();
                assert_abs_diff_eq!(got, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn degree_homogeneity() {
        // M -> cM is mu -> c mu, tau -> tau / c^2, so <O> -> c^deg <O>.
        let c: f64 = 1.4;
        let p = params(0.9, 1.6, 0.7, 2.8);
        let scaled = params(
            c * p.mu_tilde_v0(),
            p.tau_v0() / (c * c),
            p.tau_vh() / (c * c),
            p.tau_v2() / (c * c),
        );
        for id in [ObservableId::LIN, ObservableId::Q2, ObservableId::O3, ObservableId::O21] {
            let obs = graph(id);
            let base = expectation(obs, &p, 7).unwrap();
            let got = expectation(obs, &scaled, 7).unwrap();
            assert_relative_eq!(got, c.powi(obs.degree() as i32) * base, max_relative = 1e-10);
        }
    }

    #[test]
    fn products_match_catalog_composites() {
        use ObservableId::*;
        let p = params(0.5, 1.3, 0.9, 2.2);
        let dim = 6;
        let cases = [
            (LIN, LIN, Q3),
            (Q1, LIN, O4),
            (Q2, LIN, O7),
            (O1, LIN, O14),
            (O3, LIN, O22),
            (O5, LIN, O29),
            (Q1, Q1, O18),
            (Q1, Q2, O23),
            (Q2, Q2, O27),
            (Q2, Q3, O30),
            (Q3, Q3, O31),
        ];
        for (a, b, composite) in cases {
            let prod =
                product_expectation(graph(a), graph(b), &p, dim, DEFAULT_COST_BUDGET).unwrap();
            let direct = expectation(graph(composite), &p, dim).unwrap();
            assert_relative_eq!(prod, direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn free_vertex_multiplies_by_dimension() {
        let p = params(0.4, 1.0, 2.0, 3.0);
        let dim = 5;
        let base = custom(vec![(0, 1), (1, 2), (2, 0)], 3);
        let padded = custom(vec![(0, 1), (1, 2), (2, 0)], 4);
        let a = expectation(&base, &p, dim).unwrap();
        let b = expectation(&padded, &p, dim).unwrap();
        assert_relative_eq!(b, dim as f64 * a, max_relative = 1e-12);
    }

    #[test]
    fn degree_limits() {
        let p = params(0.1, 1.0, 1.0, 1.0);
        let five = custom(vec![(0, 1); 5], 2);
        match expectation(&five, &p, 5) {
            Err(Error::UnsupportedDegree { got: 5, max: 4 }) => {}
            other => panic!("expected degree error, got {other:?}"),
        }
        match product_expectation(&five, graph(ObservableId::O9), &p, 5, DEFAULT_COST_BUDGET) {
            Err(Error::UnsupportedDegree { got: 9, max: 8 }) => {}
            other => panic!("expected degree error, got {other:?}"),
        }
    }

    #[test]
    fn budget_gate_reports_required_size() {
        let p = params(0.2, 1.0, 1.0, 1.0);
        let o27 = graph(ObservableId::O27);
        match product_expectation(o27, o27, &p, 19, 1000) {
            Err(Error::CostBudgetExceeded { required, budget: 1000 }) => {
                assert_eq!(required, BELL[12]);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        // the octic square fits the default budget
        let value = product_expectation(o27, o27, &p, 19, DEFAULT_COST_BUDGET).unwrap();
        assert!(value.is_finite());
    }

    #[test]
    fn octic_product_of_disjoint_totals() {
        // <T^4 T^4> peels to a pure eighth moment of the scalar total.
        let p = params(0.3, 0.7, 1.9, 1.1);
        let dim = 6;
        let pm = pattern_moments(&p, dim).unwrap();
        let o31 = graph(ObservableId::O31);
        let got =
            product_expectation(o31, o31, &p, dim, DEFAULT_COST_BUDGET).unwrap();
        let (m, v) = (pm.mean_total(), pm.var_total());
        let want = isserlis(8, |_, _| v, |_| m);
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }
}
