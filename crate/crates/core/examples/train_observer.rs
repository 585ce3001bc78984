//! Trains one observer on a testbed and prints the loss curve. An optional
//! comma-separated channel list restricts the inputs.
//!
//! `cargo run --release --example train_observer -- mechanical 0 F,x`

use ltc_prune::testbed::{generate_dataset, DataConfig, Segment, Testbed, TestbedConfigs};
use ltc_prune::train::{evaluate, train, TrainConfig};

fn main() -> ltc_prune::Result<()> {
    let mut args = std::env::args().skip(1);
    let testbed: Testbed = args.next().as_deref().unwrap_or("mechanical").parse()?;
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let ds = generate_dataset(testbed, &TestbedConfigs::default().with_seed(seed), &DataConfig::default(), cfg.warmup_steps)?;
    let channels: Vec<String> = match args.next() {
        Some(list) => list.split(',').map(str::to_string).collect(),
        None => ds.channel_names(),
    };

    let (model, report) = train(&ds, &channels, &cfg, seed)?;
    for (epoch, (tl, vl)) in report.train_losses.iter().zip(&report.val_losses).enumerate() {
        println!("{epoch:>3}  train {tl:.5}  val {vl:.5}");
    }
    let test = evaluate(&model, &ds, Segment::Test, cfg.warmup_steps)?;
    println!(
        "best epoch {} ({:?}), val mse {:.4}, test rmse {:.4}",
        report.best_epoch, report.stop_reason, report.best_val_loss, test.rmse
    );
    Ok(())
}
