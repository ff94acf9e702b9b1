//! `pigm sample`: synthetic ensembles from explicit couplings.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pigm_core::ensemble::write_ensemble_with_metadata;
use pigm_core::sampler::{sample, SamplerConfig};
use pigm_core::ModelParams;

use crate::commands::report::suffixed;
use crate::inputs::load_params;
use crate::meta::Meta;
use crate::{CliError, CmdResult};

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// Matrix dimension (number of assets).
    #[arg(long = "D", alias = "dim")]
    pub dim: usize,

    /// Number of matrices to draw.
    #[arg(long = "n", alias = "count")]
    pub count: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Rescaled linear coupling of the uniform mode.
    #[arg(long, default_value_t = 0.5)]
    pub mu_tilde: f64,

    /// Variance 1/tau of the V0 block.
    #[arg(long, default_value_t = 0.8)]
    pub inv_tau_v0: f64,

    /// Variance 1/tau of the V_H block.
    #[arg(long, default_value_t = 0.1)]
    pub inv_tau_vh: f64,

    /// Variance 1/tau of the V_2 block.
    #[arg(long, default_value_t = 0.05)]
    pub inv_tau_v2: f64,

    /// Couplings file overriding the four flags (a `pigm fit` artifact or a
    /// bare params JSON).
    #[arg(long)]
    pub params: Option<PathBuf>,

    /// Output ensemble path; a `<out>.meta.json` sidecar echoes the config.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SampleSidecar<'a> {
    meta: &'a Meta,
    config: &'a SamplerConfig,
    output: String,
}

pub fn run(args: &SampleArgs) -> CmdResult {
    let params = match &args.params {
        Some(path) => load_params(path)?.0,
        None => {
            for (name, v) in [
                ("--inv-tau-v0", args.inv_tau_v0),
                ("--inv-tau-vh", args.inv_tau_vh),
                ("--inv-tau-v2", args.inv_tau_v2),
            ] {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(CliError::usage(format!(
                        "{name} must be a positive variance, got {v}"
                    )));
                }
            }
            ModelParams::new(
                args.mu_tilde,
                1.0 / args.inv_tau_v0,
                1.0 / args.inv_tau_vh,
                1.0 / args.inv_tau_v2,
            )
            .map_err(|e| CliError::usage(e.to_string()))?
        }
    };

    let config = SamplerConfig {
        params,
        dim: args.dim,
        count: args.count,
        seed: args.seed,
    };
    let ensemble = sample(&config)?;

    let meta = Meta::new(args, args.seed);
    write_ensemble_with_metadata(&args.out, &ensemble, &meta.kv())?;

    let sidecar = SampleSidecar {
        meta: &meta,
        config: &config,
        output: args.out.display().to_string(),
    };
    let sidecar_path = suffixed(&args.out, ".meta.json");
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;

    println!(
        "wrote {} matrices of dim {} to {} (sidecar {})",
        args.count,
        args.dim,
        args.out.display(),
        sidecar_path.display()
    );
    Ok(())
}
