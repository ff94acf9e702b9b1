//! `pigm anomaly`: outlier ranking and event enrichment.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pigm_core::analysis::{anomaly_study, AnomalyReport, DistanceMetric, FeatureSet};
use pigm_core::ensemble::read_ensemble;
use pigm_core::ObservableId;

use crate::commands::report::suffixed;
use crate::inputs::{load_params, parse_sizes, read_event_dates, Selection};
use crate::meta::Meta;
use crate::numfmt::sig;
use crate::{CliError, CmdResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Mahalanobis,
    /// Euclidean distance on per-feature z-scores.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturesArg {
    /// Observable vectors over `--select`.
    Observables,
    /// The D(D-1)/2 upper-triangle correlations as they stand.
    RawCorrelations,
    /// Principal components of the raw correlations.
    Pca,
}

#[derive(Debug, Args, Serialize)]
pub struct AnomalyArgs {
    /// Input ensemble (CSV or JSON).
    #[arg(long)]
    pub input: PathBuf,

    /// Event dates to test enrichment against (JSON array, `{"dates": []}`
    /// or one date per line). Dates outside the ensemble are dropped with a
    /// notice.
    #[arg(long)]
    pub events: PathBuf,

    #[arg(long, value_enum, default_value_t = MetricArg::Mahalanobis)]
    pub metric: MetricArg,

    #[arg(long, value_enum, default_value_t = FeaturesArg::Observables)]
    pub features: FeaturesArg,

    /// Observable selection for `--features observables`.
    #[arg(long, default_value = "least-gaussian:12")]
    pub select: String,

    /// Cumulative explained-variance target for `--features pca`.
    #[arg(long, default_value_t = 0.70)]
    pub pca_threshold: f64,

    /// Comma-separated top/bottom subset sizes.
    #[arg(long, default_value = "25,50,100")]
    pub subset_sizes: String,

    /// Fitted couplings for the `least-gaussian` ranking; fitted in-process
    /// when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,

    /// Drives the bootstrap inside the `least-gaussian` ranking only.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output stem: writes `<out>.json`, `<out>.csv` and
    /// `<out>.ranking.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct AnomalyArtifact<'a> {
    meta: &'a Meta,
    /// Ids behind the feature vectors; null unless features = observables.
    selection: Option<&'a [ObservableId]>,
    events_used: usize,
    events_dropped: usize,
    report: &'a AnomalyReport,
}

pub fn run(args: &AnomalyArgs) -> CmdResult {
    let sizes = parse_sizes(&args.subset_sizes)?;
    let ensemble = read_ensemble(&args.input)?;

    let all_events = read_event_dates(&args.events)?;
    let known: HashSet<&str> = ensemble.labels().collect();
    let events: Vec<String> = all_events
        .iter()
        .filter(|d| known.contains(d.as_str()))
        .cloned()
        .collect();
    let dropped = all_events.len() - events.len();
    if dropped > 0 {
        eprintln!("note: {dropped} event date(s) not in the ensemble were dropped");
    }
    if events.is_empty() {
        return Err(CliError::Data(anyhow::anyhow!(
            "none of the {} event date(s) match an ensemble day label",
            all_events.len()
        )));
    }

    let selection = match args.features {
        FeaturesArg::Observables => {
            let params = match &args.params {
                Some(path) => Some(load_params(path)?.0),
                None => None,
            };
            Some(Selection::parse(&args.select)?.resolve(
                &ensemble,
                params.as_ref(),
                args.seed,
            )?)
        }
        _ => None,
    };
    let features = match args.features {
        FeaturesArg::Observables => {
            FeatureSet::Observables(selection.clone().expect("resolved above"))
        }
        FeaturesArg::RawCorrelations => FeatureSet::RawCorrelations,
        FeaturesArg::Pca => FeatureSet::Pca { variance_threshold: args.pca_threshold },
    };
    let metric = match args.metric {
        MetricArg::Mahalanobis => DistanceMetric::Mahalanobis,
        MetricArg::Euclidean => DistanceMetric::EuclideanStandardized,
    };

    let report = anomaly_study(&ensemble, &features, metric, &events, &sizes)?;

    let meta = Meta::new(args, args.seed);
    let artifact = AnomalyArtifact {
        meta: &meta,
        selection: selection.as_deref(),
        events_used: events.len(),
        events_dropped: dropped,
        report: &report,
    };
    let json_path = suffixed(&args.out, ".json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&artifact)?)?;

    let csv_path = suffixed(&args.out, ".csv");
    std::fs::write(&csv_path, render_subsets_csv(&meta, &report))?;

    let rank_path = suffixed(&args.out, ".ranking.csv");
    std::fs::write(&rank_path, render_ranking_csv(&meta, &report, &events))?;

    for row in &report.rows {
        println!(
            "subset {}: p_top {} p_bottom {} odds_ratio {} fisher_p {}",
            row.size,
            sig(row.p_top),
            sig(row.p_bottom),
            sig(row.odds_ratio),
            sig(row.fisher_p)
        );
    }
    println!(
        "wrote {}, {}, {}",
        json_path.display(),
        csv_path.display(),
        rank_path.display()
    );
    Ok(())
}

fn render_subsets_csv(meta: &Meta, report: &AnomalyReport) -> String {
    let mut out = meta.csv_lines();
    let _ = writeln!(out, "# feature_count: {}", report.feature_count);
    let _ = writeln!(out, "# ridge: {}", sig(report.ridge));
    let _ = writeln!(out, "# event_count: {}", report.event_count);
    out.push_str("size,top_events,bottom_events,p_top,p_bottom,odds_ratio,fisher_p\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.size,
            r.top_events,
            r.bottom_events,
            sig(r.p_top),
            sig(r.p_bottom),
            sig(r.odds_ratio),
            sig(r.fisher_p)
        );
    }
    out
}

fn render_ranking_csv(meta: &Meta, report: &AnomalyReport, events: &[String]) -> String {
    let flagged: HashSet<&str> = events.iter().map(String::as_str).collect();
    let mut out = meta.csv_lines();
    out.push_str("rank,label,distance,event\n");
    for (k, (label, dist)) in report
        .ranked_labels
        .iter()
        .zip(&report.distances)
        .enumerate()
    {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            k + 1,
            label,
            sig(*dist),
            u8::from(flagged.contains(label.as_str()))
        );
    }
    out
}
