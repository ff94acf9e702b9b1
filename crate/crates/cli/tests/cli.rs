//! Black-box tests that drive the compiled binary through files and exit
//! codes, the same way a shell user would.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pigm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pigm"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn reference(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../reference").join(name)
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("binary runs").status.code().expect("no signal")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Non-comment CSV lines: header first, then data rows.
fn csv_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn assert_meta_lines(text: &str) {
    assert!(text.contains("# tool: pigm "), "missing tool line");
    assert!(text.contains("# config: fnv1a64:"), "missing config hash");
    assert!(text.contains("# seed: "), "missing seed line");
}

#[test]
fn help_documents_file_formats() {
    let out = run_ok(pigm().arg("--help"));
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["FILE FORMATS", "Tick CSV", "Calendar JSON", "Events file", "Ensemble CSV"] {
        assert!(text.contains(needle), "--help lost the {needle} section");
    }
    run_ok(pigm().args(["report", "-h"]));
}

#[test]
fn usage_errors_exit_code_2() {
    assert_eq!(exit_code(pigm().arg("frobnicate")), 2, "unknown subcommand");
    assert_eq!(exit_code(&mut pigm()), 2, "no subcommand");
    assert_eq!(
        exit_code(pigm().args(["sample", "--D", "8", "--out", "/tmp/x.csv"])),
        2,
        "missing required --n"
    );

    let dir = tempfile::tempdir().unwrap();
    let ens = dir.path().join("e.csv");
    run_ok(pigm().args(["sample", "--D", "8", "--n", "5", "--seed", "1"]).arg("--out").arg(&ens));
    let out = dir.path().join("obs.csv");
    let code = exit_code(
        pigm()
            .args(["observables", "--select", "O99,bogus"])
            .arg("--input")
            .arg(&ens)
            .arg("--out")
            .arg(&out),
    );
    assert_eq!(code, 2, "unknown observable id is a usage error");
}

#[test]
fn data_errors_exit_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let code = exit_code(
        pigm().args(["fit", "--input", "/nonexistent/ensemble.csv"]).arg("--out").arg(&out),
    );
    assert_eq!(code, 1, "missing input file is a data error");

    // a parseable file that fails validation is also a data error
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "# dim: 6\nlabel,i,j,value\nday,0,1,nan\n").unwrap();
    let code =
        exit_code(pigm().args(["fit"]).arg("--input").arg(&bad).arg("--out").arg(&out));
    assert_eq!(code, 1, "non-finite entry is a data error");
}

#[test]
fn selftest_passes() {
    let out = run_ok(pigm().arg("selftest"));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ok"), "selftest reports its suites:\n{text}");
}

#[test]
fn sample_artifacts_are_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let ens = dir.path().join("e.csv");
    let sidecar = dir.path().join("e.csv.meta.json");
    let args = ["sample", "--D", "8", "--n", "30", "--seed", "11"];

    run_ok(pigm().args(args).arg("--out").arg(&ens));
    let first = (std::fs::read(&ens).unwrap(), std::fs::read(&sidecar).unwrap());
    run_ok(pigm().args(args).arg("--out").arg(&ens));
    let second = (std::fs::read(&ens).unwrap(), std::fs::read(&sidecar).unwrap());
    assert_eq!(first.0, second.0, "same argv must reproduce the ensemble exactly");
    assert_eq!(first.1, second.1, "same argv must reproduce the sidecar exactly");

    run_ok(pigm().args(["sample", "--D", "8", "--n", "30", "--seed", "12"]).arg("--out").arg(&ens));
    assert_ne!(first.0, std::fs::read(&ens).unwrap(), "a new seed must change the draws");
}

/// True when `sub` appears in `full` in order (not necessarily contiguously).
fn is_ordered_subsequence(sub: &[&str], full: &[&str]) -> bool {
    let mut it = full.iter();
    sub.iter().all(|want| it.any(|got| got == want))
}

#[test]
fn tick_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let ens = dir.path().join("ens.csv");

    // ingest: two trading weeks, one calendar-excluded day, one weekend
    run_ok(
        pigm()
            .args(["ingest", "--pairs", "EUR/USD,GBP/USD,USD/JPY,AUD/USD,USD/CHF,USD/CAD"])
            .arg("--ticks")
            .arg(fixture("ticks_6pair_2w.csv"))
            .arg("--calendar")
            .arg(fixture("calendar_example.json"))
            .arg("--out")
            .arg(&ens),
    );
    let text = read(&ens);
    assert!(text.contains("# dim: 6"));
    assert_meta_lines(&text);
    let lines = csv_lines(&text);
    assert_eq!(lines[0], "label,i,j,value");
    assert_eq!(lines.len() - 1, 9 * 15, "9 days x 15 upper-triangle entries");
    assert!(text.contains("2020-06-01") && !text.contains("2020-06-04"));

    // observables: one row per day, one column per id
    let obs = dir.path().join("obs.csv");
    run_ok(
        pigm()
            .args(["observables", "--select", "all"])
            .arg("--input")
            .arg(&ens)
            .arg("--out")
            .arg(&obs),
    );
    let text = read(&obs);
    assert_meta_lines(&text);
    let lines = csv_lines(&text);
    assert_eq!(lines[0].split(',').count(), 1 + 35, "label column plus 35 ids");
    assert!(lines[0].starts_with("label,LIN,Q1,"));
    assert_eq!(lines.len() - 1, 9);

    // fit: artifact records the couplings and what they matched
    let fit = dir.path().join("fit.json");
    run_ok(pigm().arg("fit").arg("--input").arg(&ens).arg("--out").arg(&fit));
    let artifact: serde_json::Value = serde_json::from_str(&read(&fit)).unwrap();
    assert!(artifact["meta"]["config"].as_str().unwrap().starts_with("fnv1a64:"));
    assert_eq!(artifact["fit"]["dim"], 6);
    assert_eq!(artifact["fit"]["count"], 9);
    assert!(artifact["fit"]["violations"].as_array().unwrap().is_empty());
    assert!(artifact["fit"]["params"].is_object(), "positive couplings on this fixture");

    // predict: every observable gets an expectation and a sigma
    let pred = dir.path().join("pred.json");
    run_ok(
        pigm()
            .args(["predict", "--select", "all"])
            .arg("--params")
            .arg(&fit)
            .arg("--out")
            .arg(&pred),
    );
    let artifact: serde_json::Value = serde_json::from_str(&read(&pred)).unwrap();
    let rows = artifact["predictions"].as_array().unwrap();
    assert_eq!(rows.len(), 35);
    assert!(rows.iter().all(|r| r["expectation"].is_number() && r["sigma_T"].is_number()));

    // report: deviation + classification tables with the documented columns
    let stem = dir.path().join("rep");
    run_ok(pigm().arg("report").arg("--input").arg(&ens).arg("--out").arg(&stem));
    let dev = read(&dir.path().join("rep.deviation.csv"));
    assert_meta_lines(&dev);
    let dev_lines = csv_lines(&dev);
    assert_eq!(dev_lines.len() - 1, 31, "cubic and quartic observables");
    let class = read(&dir.path().join("rep.classification.csv"));
    let class_lines = csv_lines(&class);
    assert_eq!(class_lines.len() - 1, 31);
    assert!(dir.path().join("rep.json").exists());

    // shipped benchmark tables stay directly comparable: their columns must
    // appear in the generated reports, in the same order
    for (generated, shipped) in [
        (dev_lines[0], reference("deviation_benchmark.csv")),
        (class_lines[0], reference("classification_benchmark.csv")),
    ] {
        let text = read(&shipped);
        let want: Vec<&str> =
            csv_lines(&text)[0].split(',').collect();
        let got: Vec<&str> = generated.split(',').collect();
        assert!(
            is_ordered_subsequence(&want, &got),
            "{} columns {want:?} must embed in report columns {got:?}",
            shipped.display()
        );
    }
}

#[test]
fn anomaly_and_similarity_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let ens = dir.path().join("synth.csv");
    run_ok(pigm().args(["sample", "--D", "8", "--n", "40", "--seed", "3"]).arg("--out").arg(&ens));

    // two real day labels plus one unknown that must be dropped, not fatal
    let events = dir.path().join("events.json");
    std::fs::write(&events, r#"["sample-000002", "sample-000007", "not-a-day"]"#).unwrap();

    let stem = dir.path().join("anom");
    run_ok(
        pigm()
            .args(["anomaly", "--select", "fx12", "--subset-sizes", "10"])
            .arg("--input")
            .arg(&ens)
            .arg("--events")
            .arg(&events)
            .arg("--out")
            .arg(&stem),
    );
    let table = read(&dir.path().join("anom.csv"));
    assert_meta_lines(&table);
    let lines = csv_lines(&table);
    assert_eq!(lines.len() - 1, 1, "one row per subset size");
    assert!(lines[1].starts_with("10,"), "subset size column leads: {}", lines[1]);
    let ranking = read(&dir.path().join("anom.ranking.csv"));
    assert_eq!(csv_lines(&ranking).len() - 1, 40, "every day is ranked");
    assert!(dir.path().join("anom.json").exists());

    let stem = dir.path().join("sim");
    run_ok(
        pigm()
            .args(["similarity", "--select", "fx12"])
            .arg("--input")
            .arg(&ens)
            .arg("--out")
            .arg(&stem),
    );
    let artifact: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("sim.json"))).unwrap();
    assert_eq!(artifact["report"]["pair_count"], 40 * 39 / 2);
    assert!(artifact["report"]["spearman"].is_number());
    assert!(dir.path().join("sim.csv").exists());
}
