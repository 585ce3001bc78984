//! Runs the full pruning loop on one testbed and prints the trace.
//!
//! `cargo run --release --example prune_testbed -- cstr 0`

use ltc_prune::pruner::{prune_loop, PruneConfig};
use ltc_prune::report::summary_table;
use ltc_prune::testbed::{generate_dataset, DataConfig, Segment, Testbed, TestbedConfigs};
use ltc_prune::train::{evaluate, TrainConfig};

fn main() -> ltc_prune::Result<()> {
    let mut args = std::env::args().skip(1);
    let testbed: Testbed = args.next().as_deref().unwrap_or("mechanical").parse()?;
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let train = TrainConfig { seed, ..TrainConfig::default() };
    let cfgs = TestbedConfigs::default().with_seed(seed);
    let ds = generate_dataset(testbed, &cfgs, &DataConfig::default(), train.warmup_steps)?;
    let cfg = PruneConfig { train, ..PruneConfig::default() };

    let start = std::time::Instant::now();
    let outcome = prune_loop(&ds, &cfg)?;
    for rec in &outcome.trace.iterations {
        println!("iteration {} val {:.5} removed {:?}", rec.iteration, rec.val_loss, rec.removed);
        for e in &rec.causality.entries {
            println!("  {:>3} {:<24} {:.3e}", e.rank, e.name, e.score);
        }
    }
    println!("\n{}", summary_table(Some(testbed), &outcome.trace));
    let test = evaluate(&outcome.model, &ds, Segment::Test, cfg.train.warmup_steps)?;
    println!(
        "stop {:?}, final {:?}, test rmse {:.4}, {:.1}s",
        outcome.trace.stop_reason,
        outcome.trace.final_channels,
        test.rmse,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
