//! `pigm similarity`: pairwise day similarity under two metrics.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pigm_core::analysis::{similarity_study, PValueMethod, SimilarityReport};
use pigm_core::ensemble::read_ensemble;
use pigm_core::ObservableId;

use crate::commands::report::suffixed;
use crate::inputs::{load_params, Selection};
use crate::meta::Meta;
use crate::numfmt::sig;
use crate::CmdResult;

#[derive(Debug, Args, Serialize)]
pub struct SimilarityArgs {
    /// Input ensemble (CSV or JSON).
    #[arg(long)]
    pub input: PathBuf,

    /// Observable selection behind the vector distance.
    #[arg(long, default_value = "least-gaussian:12")]
    pub select: String,

    /// Fitted couplings for the `least-gaussian` ranking; fitted in-process
    /// when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,

    /// Drives the bootstrap inside the `least-gaussian` ranking only.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output stem: writes `<out>.json` and `<out>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SimilarityArtifact<'a> {
    meta: &'a Meta,
    selection: &'a [ObservableId],
    report: &'a SimilarityReport,
}

pub fn run(args: &SimilarityArgs) -> CmdResult {
    let selection = Selection::parse(&args.select)?;
    let ensemble = read_ensemble(&args.input)?;
    let params = match &args.params {
        Some(path) => Some(load_params(path)?.0),
        None => None,
    };
    let ids = selection.resolve(&ensemble, params.as_ref(), args.seed)?;

    let report = similarity_study(&ensemble, &ids)?;

    let meta = Meta::new(args, args.seed);
    let artifact = SimilarityArtifact { meta: &meta, selection: &ids, report: &report };
    let json_path = suffixed(&args.out, ".json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&artifact)?)?;

    let csv_path = suffixed(&args.out, ".csv");
    std::fs::write(&csv_path, render_pairs_csv(&meta, &report))?;

    let method = match report.p_method {
        PValueMethod::Exact => "exact permutation",
        PValueMethod::TApprox => "t approximation",
    };
    println!(
        "spearman {} over {} pair(s), one-sided p {} ({})",
        sig(report.spearman),
        report.pair_count,
        sig(report.p_value),
        method
    );
    println!("wrote {}, {}", json_path.display(), csv_path.display());
    Ok(())
}

fn render_pairs_csv(meta: &Meta, report: &SimilarityReport) -> String {
    let mut out = meta.csv_lines();
    let _ = writeln!(out, "# spearman: {}", sig(report.spearman));
    let _ = writeln!(out, "# p_value: {}", sig(report.p_value));
    let _ = writeln!(
        out,
        "# p_method: {}",
        match report.p_method {
            PValueMethod::Exact => "exact",
            PValueMethod::TApprox => "t-approx",
        }
    );
    let _ = writeln!(out, "# ridge: {}", sig(report.ridge));
    out.push_str("label_a,label_b,observable_distance,matrix_distance\n");
    for ((a, b), (od, md)) in report
        .pair_labels
        .iter()
        .zip(report.observable_distances.iter().zip(&report.matrix_distances))
    {
        let _ = writeln!(out, "{},{},{},{}", a, b, sig(*od), sig(*md));
    }
    out
}
