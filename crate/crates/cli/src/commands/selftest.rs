//! `pigm selftest`: host-side verification of the numerical core.
//!
//! Runs the invariant suites at D = 4, 6 and 8 with a fixed seed: projector
//! algebra, evaluator-vs-brute-force agreement, three independent routes to
//! the moments, sampler calibration and the Fisher tail against frozen exact
//! values. One line per check; any failure exits nonzero.

use clap::Args;
use serde::Serialize;

use pigm_core::analysis::{fisher_exact_one_sided, odds_ratio};
use pigm_core::moments::{
    analytic_expectation, expectation, symbolic_expectation, theoretical_sigma, SigmaMethod,
};
use pigm_core::observables::{evaluate, evaluate_bruteforce, graph};
use pigm_core::rep::{build_clebschs, decompose, project, projector_trace, reconstruct, Irrep};
use pigm_core::sampler::{sample, sample_matrix, SamplerConfig};
use pigm_core::{CorrelationMatrix, ModelParams, ObservableId};

use crate::{CliError, CmdResult};

#[derive(Debug, Args, Serialize)]
pub struct SelftestArgs {
    /// Seed for the deterministic test matrices.
    #[arg(long, default_value_t = 415)]
    pub seed: u64,
}

struct Runner {
    failures: usize,
    checks: usize,
}

impl Runner {
    fn check(&mut self, name: &str, result: Result<(), String>) {
        self.checks += 1;
        match result {
            Ok(()) => println!("ok   {name}"),
            Err(msg) => {
                self.failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
}

fn test_params() -> ModelParams {
    // inverse couplings 0.8, 0.1, 0.05: well separated block variances
    ModelParams::new(0.5, 1.25, 10.0, 20.0).expect("valid test params")
}

/// Spread-out couplings exercising the coupling-dependent moment terms.
fn skew_params() -> ModelParams {
    ModelParams::new(-0.3, 2.0, 0.7, 5.0).expect("valid test params")
}

fn test_matrix(dim: usize, seed: u64, index: u64) -> CorrelationMatrix {
    sample_matrix(&test_params(), dim, seed, index).expect("sampler works")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn check_all<I, F>(items: I, mut f: F) -> Result<(), String>
where
    I: IntoIterator,
    F: FnMut(I::Item) -> Result<(), String>,
{
    for item in items {
        f(item)?;
    }
    Ok(())
}

pub fn run(args: &SelftestArgs) -> CmdResult {
    let mut r = Runner { failures: 0, checks: 0 };

    for dim in [4usize, 6, 8] {
        r.check(
            &format!("projector block traces (D={dim})"),
            projector_traces(dim),
        );
        r.check(
            &format!("projection algebra on a random matrix (D={dim})"),
            projection_algebra(dim, args.seed),
        );
        r.check(
            &format!("decompose/reconstruct round-trip (D={dim})"),
            decompose_roundtrip(dim, args.seed),
        );
        r.check(
            &format!("fast evaluators match brute force (D={dim})"),
            evaluators_vs_bruteforce(dim, args.seed),
        );
        r.check(
            &format!("moment engine matches closed forms (D={dim})"),
            moment_routes_agree(dim),
        );
    }
    r.check("sampler reproduces model moments (D=8)", sampler_moments(args.seed));
    r.check("fisher tail matches frozen exact values", fisher_frozen());

    println!("selftest: {} of {} checks passed", r.checks - r.failures, r.checks);
    if r.failures > 0 {
        return Err(CliError::Data(anyhow::anyhow!(
            "{} selftest check(s) failed",
            r.failures
        )));
    }
    Ok(())
}

fn projector_traces(dim: usize) -> Result<(), String> {
    let d = dim as f64;
    let want = [
        (Irrep::V0, 1.0),
        (Irrep::VH, d - 1.0),
        (Irrep::V2, d * (d - 3.0) / 2.0),
        (Irrep::PhysTotal, d * (d - 1.0) / 2.0),
    ];
    check_all(want, |(irrep, expected)| {
        let got = projector_trace(irrep, dim).map_err(|e| e.to_string())?;
        if !close(got, expected, 1e-12) {
            return Err(format!("trace {irrep:?} = {got}, want {expected}"));
        }
        Ok(())
    })
}

fn projection_algebra(dim: usize, seed: u64) -> Result<(), String> {
    let m = test_matrix(dim, seed, 0);
    let blocks = [Irrep::V0, Irrep::VH, Irrep::V2];
    let parts: Vec<CorrelationMatrix> = blocks
        .iter()
        .map(|&b| project(&m, b).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;

    for (bi, pi) in blocks.iter().zip(&parts) {
        // idempotence: projecting a projection changes nothing
        let again = project(pi, *bi).map_err(|e| e.to_string())?;
        for (x, y) in again.as_slice().iter().zip(pi.as_slice()) {
            if (x - y).abs() > 1e-10 {
                return Err(format!("{bi:?} not idempotent: {x} vs {y}"));
            }
        }
        // orthogonality: other blocks annihilate it
        for &bj in blocks.iter().filter(|&&bj| bj != *bi) {
            let cross = project(pi, bj).map_err(|e| e.to_string())?;
            if let Some(x) = cross.as_slice().iter().find(|x| x.abs() > 1e-10) {
                return Err(format!("{bj:?} of {bi:?} component = {x}, want 0"));
            }
        }
    }
    // completeness: components add back to the matrix
    for (k, x) in m.as_slice().iter().enumerate() {
        let s: f64 = parts.iter().map(|p| p.as_slice()[k]).sum();
        if (s - x).abs() > 1e-10 {
            return Err(format!("component sum {s} != entry {x}"));
        }
    }
    Ok(())
}

fn decompose_roundtrip(dim: usize, seed: u64) -> Result<(), String> {
    let m = test_matrix(dim, seed, 1);
    let clebschs = build_clebschs(dim).map_err(|e| e.to_string())?;
    let comps = decompose(&m, &clebschs).map_err(|e| e.to_string())?;
    let back = reconstruct(&comps, &clebschs).map_err(|e| e.to_string())?;
    for (x, y) in back.as_slice().iter().zip(m.as_slice()) {
        if (x - y).abs() > 1e-10 {
            return Err(format!("reconstructed {x} vs original {y}"));
        }
    }
    Ok(())
}

fn evaluators_vs_bruteforce(dim: usize, seed: u64) -> Result<(), String> {
    let m = test_matrix(dim, seed, 2);
    check_all(ObservableId::ALL, |id| {
        let g = graph(id);
        // the 7- and 8-vertex quartics cost D^7..D^8 terms; cheap up to D=6
        if dim > 6 && g.vertex_count >= 7 {
            return Ok(());
        }
        let brute = evaluate_bruteforce(&m, g).map_err(|e| e.to_string())?;
        let fast = evaluate(&m, id);
        if !close(fast, brute, 1e-9) {
            return Err(format!("{id}: fast {fast} vs brute {brute}"));
        }
        Ok(())
    })
}

fn moment_routes_agree(dim: usize) -> Result<(), String> {
    use ObservableId::*;
    let closed_form_ids = [LIN, Q1, Q2, Q3, O1, O2, O3, O4, O5, O6, O7, O8];
    check_all([test_params(), skew_params()], |params| {
        for id in closed_form_ids {
            let engine = expectation(graph(id), &params, dim).map_err(|e| e.to_string())?;
            let closed = analytic_expectation(id, &params, dim).map_err(|e| e.to_string())?;
            if !close(engine, closed, 1e-9) {
                return Err(format!("{id}: engine {engine} vs closed form {closed}"));
            }
        }
        // quartics have no closed form; cross-check the exact-rational route
        for id in [O9, O19, O31] {
            let engine = expectation(graph(id), &params, dim).map_err(|e| e.to_string())?;
            let symbolic = symbolic_expectation(graph(id))
                .map_err(|e| e.to_string())?
                .evaluate(&params, dim)
                .map_err(|e| e.to_string())?;
            if !close(engine, symbolic, 1e-9) {
                return Err(format!("{id}: engine {engine} vs symbolic {symbolic}"));
            }
        }
        Ok(())
    })
}

fn sampler_moments(seed: u64) -> Result<(), String> {
    let dim = 8;
    let count = 4000;
    let params = test_params();
    let ensemble = sample(&SamplerConfig { params, dim, count, seed })
        .map_err(|e| e.to_string())?;
    check_all(
        [ObservableId::LIN, ObservableId::Q1, ObservableId::Q2, ObservableId::Q3],
        |id| {
            let mean = ensemble.iter().map(|m| evaluate(m, id)).sum::<f64>() / count as f64;
            let want = expectation(graph(id), &params, dim).map_err(|e| e.to_string())?;
            let sigma = theoretical_sigma(graph(id), &params, dim, SigmaMethod::default())
                .map_err(|e| e.to_string())?;
            let se = sigma / (count as f64).sqrt();
            if (mean - want).abs() > 6.0 * se {
                return Err(format!(
                    "{id}: sample mean {mean} vs {want} ({}se)",
                    (mean - want).abs() / se
                ));
            }
            Ok(())
        },
    )
}

fn fisher_frozen() -> Result<(), String> {
    // hypergeometric tails computed independently with exact rationals
    let cases = [
        ([[11u64, 14], [4, 21]], 0.031_109_238_359_935_31),
        ([[5, 20], [0, 25]], 33.0 / 1316.0),
    ];
    for (table, want) in cases {
        let got = fisher_exact_one_sided(table);
        if (got - want).abs() > 1e-12 {
            return Err(format!("fisher {table:?} = {got}, want {want}"));
        }
    }
    let or = odds_ratio(0.44, 0.16);
    if (or - 4.125).abs() > 1e-12 {
        return Err(format!("odds ratio = {or}, want 4.125"));
    }
    Ok(())
}
