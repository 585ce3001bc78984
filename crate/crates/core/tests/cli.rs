use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ltc_prune::ltc::{read_model, write_model};
use ltc_prune::testbed::read_dataset;

const FAST: &str = "[train]\nhidden_size = 4\nmax_epochs = 2\nn_seeds = 1\n";

fn ltc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltc-prune")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fast_config(dir: &Path) -> PathBuf {
    let path = dir.join("fast.toml");
    std::fs::write(&path, FAST).unwrap();
    path
}

fn generate(dir: &Path, testbed: &str) -> PathBuf {
    let out = dir.join(format!("gen_{testbed}"));
    let o = ltc(&["generate", "--testbed", testbed, "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("dataset.csv")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_writes_dataset_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = generate(dir.path(), "mechanical");
    let header = std::fs::read_to_string(&csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,F,x,F_x_interaction,noise1,noise2,noise3,xdot");
    let ds = read_dataset(&csv, &csv.with_extension("meta.json")).unwrap();
    assert_eq!(ds.len(), 4001);

    let manifest = json(&csv.parent().unwrap().join("manifest.json"));
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["testbed"], "mechanical");
    for artifact in manifest["artifacts"].as_array().unwrap() {
        assert!(Path::new(artifact["path"].as_str().unwrap()).exists());
    }
    assert_eq!(json(&csv.with_extension("meta.json"))["schema_version"], 1);
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "cstr");
    let rerun = dir.path().join("rerun");
    let o = ltc(&["generate", "--manifest", s(&a.parent().unwrap().join("manifest.json")), "--out", s(&rerun)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(rerun.join("dataset.csv")).unwrap());
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(ltc(&["generate", "--testbed", "pendulum", "--out", s(&out)]).status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[mechanical]\nm = -1.0\n").unwrap();
    let o = ltc(&["generate", "--testbed", "mechanical", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mechanical.m"));
    assert_eq!(ltc(&["generate", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(ltc(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_dataset_exits_3_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let o = ltc(&["prune", "--dataset", s(&missing), "--out", s(&dir.path().join("p"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.csv"));
}

#[test]
fn train_evaluate_analyze_and_channel_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    let csv = generate(dir.path(), "mechanical");
    let run = dir.path().join("train");
    let o = ltc(&["train", "--dataset", s(&csv), "--config", s(&cfg), "--channels", "F,x", "--out", s(&run)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("loss.svg").exists());
    let model = read_model(&run.join("model.json")).unwrap();
    assert_eq!(model.channel_names, vec!["F", "x"]);

    let eval = dir.path().join("eval");
    let o = ltc(&["evaluate", "--model", s(&run.join("model.json")), "--dataset", s(&csv), "--segment", "test", "--out", s(&eval)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = json(&eval.join("metrics.json"));
    assert_eq!(metrics["samples"], 801 - 50);
    let rmse = metrics["standardized"]["rmse"].as_f64().unwrap();
    let mse = metrics["standardized"]["mse"].as_f64().unwrap();
    assert!((rmse * rmse - mse).abs() < 1e-12);
    let rows = std::fs::read_to_string(eval.join("predictions.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 801);
    assert!(eval.join("prediction.svg").exists());

    let analyze = dir.path().join("analyze");
    let o = ltc(&["analyze", "--model", s(&run.join("model.json")), "--dataset", s(&csv), "--out", s(&analyze)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&analyze.join("causality.json"));
    assert_eq!(report["forward_passes"], 3);
    assert_eq!(std::fs::read_to_string(analyze.join("causality.csv")).unwrap().lines().count(), 3);

    let mut foreign = model.clone();
    foreign.channel_names = vec!["F".into(), "Prey".into()];
    write_model(&foreign, &dir.path().join("foreign.json")).unwrap();
    let o = ltc(&["evaluate", "--model", s(&dir.path().join("foreign.json")), "--dataset", s(&csv), "--out", s(&eval)]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn prune_with_one_iteration_records_only_iteration_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path());
    let csv = generate(dir.path(), "predprey");
    let out = dir.path().join("prune");
    let o = ltc(&["prune", "--dataset", s(&csv), "--config", s(&cfg), "--max-iters", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = json(&out.join("trace.json"));
    assert_eq!(trace["iterations"].as_array().unwrap().len(), 1);
    assert_eq!(trace["stop_reason"], "max_iters");
    assert_eq!(trace["schema_version"], 1);
    let summary = std::fs::read_to_string(out.join("summary.md")).unwrap();
    assert!(summary.contains("Final set: {Prey, alpha, alpha_Prey_interaction, noise1, noise2, noise3}"));
    for chart in ["iteration_0/causality.svg", "iteration_0/loss.svg", "prediction.svg"] {
        let svg = std::fs::read_to_string(out.join(chart)).unwrap();
        roxmltree::Document::parse(&svg).expect("well-formed SVG");
    }
    let bars = std::fs::read_to_string(out.join("iteration_0/causality.svg")).unwrap();
    assert_eq!(bars.matches(r#"class="bar""#).count(), 6);
}

#[test]
fn report_warns_on_empty_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("loss_history.csv"), "epoch,train_loss,val_loss\n").unwrap();
    let o = ltc(&["report", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = json(&dir.path().join("report.manifest.json"));
    assert_eq!(manifest["warnings"].as_array().unwrap().len(), 1);
    assert!(!dir.path().join("loss.svg").exists());
}
