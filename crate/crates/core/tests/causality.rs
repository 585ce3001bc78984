use ltc_prune::causality::{causality_report, causality_report_on, causality_score, PerturbationSpec};
use ltc_prune::ltc::{LtcParameters, ObserverModel};
use ltc_prune::testbed::{custom_dataset, smoothed_noise, ChannelMatrix, Segment, TimeSeriesDataset};
use ltc_prune::train::{train, TrainConfig};
use proptest::prelude::*;

fn dataset(n: usize, d: usize, seed: u64) -> TimeSeriesDataset {
    let cols: Vec<Vec<f64>> = (0..d).map(|k| smoothed_noise(n, 0.05, seed * 10 + k as u64).unwrap()).collect();
    let names: Vec<String> = (0..d).map(|k| format!("u{k}")).collect();
    let target: Vec<f64> = (0..n).map(|i| cols[0][i] - 0.5 * cols[d - 1][i]).collect();
    let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.05).collect();
    let inputs: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(cols.iter().map(Vec::as_slice)).collect();
    custom_dataset(t, &inputs, ("y", &target)).unwrap()
}

fn random_model(h: usize, names: &[String], seed: u64) -> ObserverModel {
    let params = LtcParameters::init(h, names.len(), seed).unwrap();
    ObserverModel::new(params, names.to_vec(), 0.05, seed)
}

/// Zeroes the input weights of channel `k`, so the model cannot see it.
fn blind(model: &mut ObserverModel, k: usize) {
    let d = model.params.input_dim;
    for i in 0..model.params.hidden_size {
        model.params.w_in[i * d + k] = 0.0;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ignored_channel_scores_exactly_zero(seed in 0u64..1000, d in 2usize..5, k in 0usize..4) {
        let k = k % d;
        let ds = dataset(400, d, seed);
        let mut model = random_model(6, &ds.channel_names(), seed);
        blind(&mut model, k);
        let report = causality_report(&model, &ds, &PerturbationSpec::default(), 50).unwrap();
        prop_assert_eq!(report.score(&format!("u{k}")), Some(0.0));
        prop_assert_eq!(report.forward_passes, d + 1);
        prop_assert!(report.entries.iter().all(|e| e.score >= 0.0));
    }

    #[test]
    fn scores_scale_linearly_in_epsilon(seed in 0u64..1000) {
        let ds = dataset(400, 3, seed);
        let model = random_model(6, &ds.channel_names(), seed);
        let spec = PerturbationSpec { epsilon: 1e-3, ..PerturbationSpec::default() };
        let small = causality_report(&model, &ds, &spec, 50).unwrap();
        let large = causality_report(&model, &ds, &spec.with_epsilon(2e-3), 50).unwrap();
        for e in &small.entries {
            let ratio = large.score(&e.name).unwrap() / e.score;
            prop_assert!((1.8..=2.2).contains(&ratio), "{} ratio {}", e.name, ratio);
        }
    }

    #[test]
    fn ranks_follow_scores(seed in 0u64..1000) {
        let ds = dataset(400, 4, seed);
        let model = random_model(5, &ds.channel_names(), seed);
        let report = causality_report(&model, &ds, &PerturbationSpec::default(), 50).unwrap();
        for (i, pair) in report.entries.windows(2).enumerate() {
            prop_assert!(pair[0].score >= pair[1].score);
            prop_assert_eq!(pair[0].rank, i + 1);
        }
    }
}

#[test]
fn single_channel_score_matches_report() {
    let ds = dataset(400, 3, 7);
    let model = random_model(6, &ds.channel_names(), 7);
    let spec = PerturbationSpec::default();
    let report = causality_report(&model, &ds, &spec, 50).unwrap();
    for (j, name) in model.channel_names.iter().enumerate() {
        let direct = causality_score(&model, &ds, j, &spec, 50).unwrap();
        assert!((direct - report.score(name).unwrap()).abs() <= 1e-15 * direct.max(1.0));
    }
}

#[test]
fn trained_model_ranks_the_unused_channel_last() {
    let ds = dataset(1500, 3, 2);
    let cfg = TrainConfig { hidden_size: 8, max_epochs: 30, lr: 1e-2, ..TrainConfig::default() };
    let (model, _) = train(&ds, &ds.channel_names(), &cfg, 0).unwrap();
    let report = causality_report(&model, &ds, &PerturbationSpec::default(), cfg.warmup_steps).unwrap();
    assert_eq!(report.names_by_rank().last(), Some(&"u1"));
}

#[test]
fn explicit_input_block_matches_segment_scoring() {
    let ds = dataset(400, 2, 4);
    let model = random_model(4, &ds.channel_names(), 4);
    let spec = PerturbationSpec::default();
    let inputs: ChannelMatrix = ds.segment_inputs(&model.channel_names, Segment::Val).unwrap();
    let a = causality_report(&model, &ds, &spec, 50).unwrap();
    let b = causality_report_on(&model, &inputs, &spec, 50).unwrap();
    assert_eq!(a, b);
}
