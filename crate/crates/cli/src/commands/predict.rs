//! `pigm predict`: model expectations and sigmas at fitted couplings.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pigm_core::moments::{expectation, theoretical_sigma, SigmaMethod};
use pigm_core::observables::graph;
use pigm_core::ObservableId;

use crate::inputs::{load_params, Selection};
use crate::meta::Meta;
use crate::{CliError, CmdResult};

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Couplings: a `pigm fit` artifact or a bare params JSON.
    #[arg(long)]
    pub params: PathBuf,

    /// Matrix dimension; required when the params file does not record one.
    #[arg(long = "D", alias = "dim")]
    pub dim: Option<usize>,

    /// `all`, `fx12` or a comma-separated id list (`least-gaussian` needs an
    /// ensemble and is not available here).
    #[arg(long, default_value = "all")]
    pub select: String,

    /// Recorded in the artifact metadata; prediction is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output JSON with one row per observable.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Prediction {
    id: ObservableId,
    expectation: f64,
    #[serde(rename = "sigma_T")]
    sigma_t: f64,
    /// How the sigma was computed; always the exact second-moment route.
    method: &'static str,
}

#[derive(Serialize)]
struct PredictArtifact<'a> {
    meta: &'a Meta,
    dim: usize,
    predictions: Vec<Prediction>,
}

pub fn run(args: &PredictArgs) -> CmdResult {
    let selection = Selection::parse(&args.select)?;
    let ids = match &selection {
        Selection::All => ObservableId::ALL.to_vec(),
        Selection::Fx12 => pigm_core::observables::FX_BENCHMARK_12.to_vec(),
        Selection::Ids(ids) => ids.clone(),
        Selection::LeastGaussian(_) => {
            return Err(CliError::usage(
                "least-gaussian ranks against an ensemble; pass explicit ids here",
            ));
        }
    };

    let (params, file_dim) = load_params(&args.params)?;
    let dim = args.dim.or(file_dim).ok_or_else(|| {
        CliError::usage("params file records no dimension; pass --D")
    })?;

    let predictions = ids
        .iter()
        .map(|&id| {
            let g = graph(id);
            Ok(Prediction {
                id,
                expectation: expectation(g, &params, dim)?,
                sigma_t: theoretical_sigma(g, &params, dim, SigmaMethod::default())?,
                method: "exact",
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let meta = Meta::new(args, args.seed);
    let artifact = PredictArtifact { meta: &meta, dim, predictions };
    std::fs::write(&args.out, serde_json::to_string_pretty(&artifact)?)?;

    println!(
        "wrote {} prediction(s) at D={} to {}",
        artifact.predictions.len(),
        dim,
        args.out.display()
    );
    Ok(())
}
