//! Trains a small observer, writes its loss history and test predictions as
//! CSV, and renders both as SVG charts next to them.
//!
//! `cargo run --release --example render_report -- report_out`

use std::path::PathBuf;

use ltc_prune::report::{render_charts, ChartKind};
use ltc_prune::testbed::{fmt_f64, generate_dataset, DataConfig, Segment, Testbed, TestbedConfigs};
use ltc_prune::train::{multi_seed_train, predict_segment, write_loss_history, TrainConfig};

fn main() -> ltc_prune::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "report_out".into()));
    std::fs::create_dir_all(&dir).map_err(|e| ltc_prune::Error::Io { path: dir.clone(), source: e })?;

    let cfg = TrainConfig { n_seeds: 1, max_epochs: 30, ..TrainConfig::default() };
    let ds = generate_dataset(Testbed::Mechanical, &TestbedConfigs::default(), &DataConfig::default(), cfg.warmup_steps)?;
    let channels = vec!["F".to_string(), "x".to_string()];
    let (model, reports) = multi_seed_train(&ds, &channels, &cfg)?;
    write_loss_history(&reports[0], &dir.join(ChartKind::Loss.source()))?;

    let (pred, truth) = predict_segment(&model, &ds, Segment::Test)?;
    let t = &ds.t[ds.segment_range(Segment::Test)];
    let mut csv = String::from("t,truth,prediction\n");
    for ((t, y), p) in t.iter().zip(truth).zip(&pred) {
        csv.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(*y), fmt_f64(*p)));
    }
    let path = dir.join(ChartKind::Prediction.source());
    std::fs::write(&path, csv).map_err(|e| ltc_prune::Error::Io { path, source: e })?;

    let outcome = render_charts(&dir);
    for path in &outcome.written {
        println!("wrote {}", path.display());
    }
    for warning in &outcome.warnings {
        println!("skipped: {warning}");
    }
    Ok(())
}
