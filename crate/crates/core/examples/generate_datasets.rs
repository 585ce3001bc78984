//! Simulates all three testbeds and writes `<testbed>.csv` plus
//! `<testbed>.meta.json` into the given directory.
//!
//! `cargo run --release --example generate_datasets -- out/ 0`

use std::path::PathBuf;

use ltc_prune::testbed::{generate_dataset, write_dataset, DataConfig, Testbed, TestbedConfigs};

fn main() -> ltc_prune::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "datasets".into()));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    std::fs::create_dir_all(&dir).map_err(|e| ltc_prune::Error::Io { path: dir.clone(), source: e })?;

    let cfgs = TestbedConfigs::default().with_seed(seed);
    for testbed in [Testbed::Mechanical, Testbed::Cstr, Testbed::PredPrey] {
        let ds = generate_dataset(testbed, &cfgs, &DataConfig::default(), 50)?;
        let csv = dir.join(format!("{testbed}.csv"));
        write_dataset(&ds, &csv, &dir.join(format!("{testbed}.meta.json")))?;
        println!("{}: {} samples, channels {:?}, split {:?}", csv.display(), ds.len(), ds.channel_names(), ds.split);
    }
    Ok(())
}
