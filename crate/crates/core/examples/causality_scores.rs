//! Trains an observer on every channel of a testbed, then ranks the channels
//! by how much a small constant shift on each one moves the estimate.
//!
//! `cargo run --release --example causality_scores -- predprey 1`

use ltc_prune::causality::{causality_report, PerturbationSpec};
use ltc_prune::testbed::{generate_dataset, DataConfig, Testbed, TestbedConfigs};
use ltc_prune::train::{multi_seed_train, TrainConfig};

fn main() -> ltc_prune::Result<()> {
    let mut args = std::env::args().skip(1);
    let testbed: Testbed = args.next().as_deref().unwrap_or("mechanical").parse()?;
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let ds = generate_dataset(testbed, &TestbedConfigs::default().with_seed(seed), &DataConfig::default(), cfg.warmup_steps)?;
    let (model, _) = multi_seed_train(&ds, &ds.channel_names(), &cfg)?;

    let spec = PerturbationSpec::default();
    let report = causality_report(&model, &ds, &spec, cfg.warmup_steps)?;
    println!("epsilon {} on the {} segment, {} forward passes", spec.epsilon, report.segment, report.forward_passes);
    let max = report.max_score();
    for e in &report.entries {
        println!("{:>2} {:<24} {:.3e}  ({:5.1}% of max)", e.rank, e.name, e.score, 100.0 * e.score / max);
    }

    // Scores are linear in epsilon for small shifts.
    let doubled = causality_report(&model, &ds, &spec.with_epsilon(2.0 * spec.epsilon), cfg.warmup_steps)?;
    let top = &report.entries[0].name;
    println!("doubling epsilon scales the {top} score by {:.3}", doubled.score(top).unwrap() / report.score(top).unwrap());
    Ok(())
}
