//! `pigm observables`: per-day observable values as a CSV table.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pigm_core::ensemble::read_ensemble;
use pigm_core::observables::evaluate;

use crate::inputs::{load_params, Selection};
use crate::meta::Meta;
use crate::numfmt::sig;
use crate::{CliError, CmdResult};

#[derive(Debug, Args, Serialize)]
pub struct ObservablesArgs {
    /// Input ensemble (CSV or JSON).
    #[arg(long)]
    pub input: PathBuf,

    /// `all`, `fx12`, `least-gaussian[:N]` or a comma-separated id list.
    #[arg(long, default_value = "all")]
    pub select: String,

    /// Fitted couplings for the `least-gaussian` ranking; fitted in-process
    /// when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,

    /// Drives the bootstrap inside the `least-gaussian` ranking only.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV: rows = days, columns = observable ids.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &ObservablesArgs) -> CmdResult {
    let selection = Selection::parse(&args.select)?;
    let ensemble = read_ensemble(&args.input)?;
    let params = match &args.params {
        Some(path) => Some(load_params(path)?.0),
        None => None,
    };
    let ids = selection.resolve(&ensemble, params.as_ref(), args.seed)?;

    let meta = Meta::new(args, args.seed);
    let mut out = meta.csv_lines();
    let header: Vec<&str> = ids.iter().map(|id| id.name()).collect();
    let _ = writeln!(out, "label,{}", header.join(","));
    for m in ensemble.iter() {
        if m.label().contains([',', '\n', '\r']) {
            return Err(CliError::Data(anyhow::anyhow!(
                "day label {:?} contains a CSV delimiter",
                m.label()
            )));
        }
        let row: Vec<String> = ids.iter().map(|&id| sig(evaluate(m, id))).collect();
        let _ = writeln!(out, "{},{}", m.label(), row.join(","));
    }
    std::fs::write(&args.out, out)?;

    println!(
        "wrote {} day(s) x {} observable(s) to {}",
        ensemble.len(),
        ids.len(),
        args.out.display()
    );
    Ok(())
}
