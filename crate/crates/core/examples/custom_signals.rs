//! Builds a dataset from your own signals and lets the pruner find the
//! inputs that matter. Here the target is a lagged response to `drive` and
//! `load`; `decoy` is unrelated.
//!
//! `cargo run --release --example custom_signals`

use ltc_prune::pruner::{prune_loop, PruneConfig};
use ltc_prune::report::summary_table;
use ltc_prune::testbed::{custom_dataset, smoothed_noise};
use ltc_prune::train::TrainConfig;

fn main() -> ltc_prune::Result<()> {
    let n = 6000;
    let dt = 0.05;
    let drive = smoothed_noise(n, 0.02, 1)?;
    let load = smoothed_noise(n, 0.02, 2)?;
    let decoy = smoothed_noise(n, 0.02, 3)?;

    // First-order lag: y' = (drive - 0.5 load - y) / 0.5
    let mut response = vec![0.0; n];
    for k in 1..n {
        let y = response[k - 1];
        response[k] = y + dt * (drive[k - 1] - 0.5 * load[k - 1] - y) / 0.5;
    }
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let ds = custom_dataset(t, &[("drive", &drive), ("load", &load), ("decoy", &decoy)], ("response", &response))?;

    let cfg = PruneConfig {
        train: TrainConfig { hidden_size: 16, ..TrainConfig::default() },
        ..PruneConfig::default()
    };
    let outcome = prune_loop(&ds, &cfg)?;
    println!("{}", summary_table(None, &outcome.trace));
    Ok(())
}
