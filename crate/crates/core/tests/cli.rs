use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hypotest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypotest"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hypotest(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_json(args: &[&str]) -> serde_json::Value {
    let out = hypotest(args);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    serde_json::from_str(stderr.trim()).unwrap_or_else(|_| panic!("not JSON: {stderr}"))
}

const FAST: &[&str] = &["--permutations", "3", "--grid", "10", "--boot", "100", "--sample", "500", "--epochs", "3"];

fn generate(dir: &Path) -> String {
    let csv = dir.join("data.csv").display().to_string();
    ok(&["generate", "--n", "1200", "--seed", "4", "--out", &csv]);
    csv
}

#[test]
fn generated_csv_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let csv = generate(dir.path());
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q1,q2,r,eps,F"));
    assert_eq!(lines.count(), 1200);
}

#[test]
fn analyze_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = generate(dir.path());
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run).display().to_string();
        let mut args = vec!["analyze", "--data", &csv, "--target", "F", "--seed", "9", "--out", &out];
        args.extend_from_slice(FAST);
        ok(&args);
        reports.push(fs::read(dir.path().join(run).join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(report["variables"].as_array().unwrap().len(), 4);
    assert_eq!(report["schema_version"], 1);
}

#[test]
fn train_then_analyze_with_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let csv = generate(dir.path());
    let model = dir.path().join("m.json").display().to_string();
    let summary = ok(&["train", "--data", &csv, "--target", "F", "--epochs", "3", "--out", &model]);
    let summary: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(summary["n_train"], 960);

    let mut args = vec!["analyze", "--data", &csv, "--target", "F", "--model", &model];
    args.extend_from_slice(FAST);
    let report: serde_json::Value = serde_json::from_str(&ok(&args)).unwrap();
    assert_eq!(report["model"]["source"], "loaded");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let csv = generate(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "data = {csv:?}\ntarget = \"F\"\nseed = 2\npermutations = 2\ngrid = 8\nboot = 100\nsample = 300\n[model]\nkind = \"train\"\n[model.mlp]\nepochs = 2\n"
        ),
    )
    .unwrap();
    let cfg = cfg.display().to_string();
    let report: serde_json::Value = serde_json::from_str(&ok(&["analyze", "--config", &cfg, "--grid", "6"])).unwrap();
    assert_eq!(report["config"]["grid"], 6);
    assert_eq!(report["config"]["permutations"], 2);
    assert_eq!(report["config"]["seed"], 2);
    assert_eq!(report["variables"][0]["f2"]["permutations"], 2);
}

#[test]
fn report_subcommand_renders_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run").display().to_string();
    let mut args = vec!["analyze", "--data", "coulomb", "--seed", "1", "--out", &out];
    args.extend_from_slice(FAST);
    ok(&args);
    let table = ok(&["report", &out]);
    assert!(table.contains("| Variable |"));
    for v in ["q1", "q2", "r", "eps"] {
        assert!(table.contains(&format!("| {v} |")));
    }
    let json = ok(&["report", &out, "--format", "json"]);
    assert_eq!(json.as_bytes(), fs::read(dir.path().join("run/report.json")).unwrap());
}

#[test]
fn failures_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.csv").display().to_string();
    assert_eq!(error_json(&["analyze", "--data", &missing, "--target", "y"])["code"], "file_not_found");
    assert_eq!(error_json(&["analyze", "--data", &missing])["code"], "invalid_config");
    assert_eq!(error_json(&["analyze", "--alpha", "2"])["code"], "invalid_config");

    let csv = generate(dir.path());
    let err = error_json(&["analyze", "--data", &csv, "--target", "nope"]);
    assert_eq!(err["code"], "missing_target");
    assert!(err["message"].as_str().unwrap().contains("nope"));
}
