//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails. Runs the full pruning study on
//! every testbed for three seeds, so it takes several minutes on one core.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use ltc_prune::causality::{causality_report, PerturbationSpec};
use ltc_prune::ltc::{forward, LtcParameters, ObserverModel};
use ltc_prune::pruner::{prune_loop, PruneConfig, PruneOutcome};
use ltc_prune::testbed::{
    generate_dataset, rk4_step, simulate_mechanical, simulate_predprey, ChannelKind, ChannelMatrix, DataConfig,
    MechanicalConfig, PredPreyConfig, Segment, Testbed, TestbedConfigs, TimeSeriesDataset,
};
use ltc_prune::train::{backward, evaluate, mse_loss, multi_seed_train, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [0, 1, 2];

struct Run {
    seed: u64,
    dataset: TimeSeriesDataset,
    outcome: PruneOutcome,
    cfg: PruneConfig,
}

impl Run {
    fn final_set(&self) -> BTreeSet<&str> {
        self.outcome.trace.final_channels.iter().map(String::as_str).collect()
    }

    /// Best validation loss and model for `channels`, reusing a pruning
    /// iteration that trained exactly that set (training is deterministic).
    fn model_on(&self, channels: &[&str]) -> (f64, ObserverModel) {
        let wanted: BTreeSet<&str> = channels.iter().copied().collect();
        for model in &self.outcome.iteration_models {
            let have: BTreeSet<&str> = model.channel_names.iter().map(String::as_str).collect();
            if have == wanted {
                return (model.training_meta.best_val_loss.unwrap(), model.clone());
            }
        }
        let names: Vec<String> = channels.iter().map(|c| c.to_string()).collect();
        let (model, _) = multi_seed_train(&self.dataset, &names, &self.cfg.train).unwrap();
        (model.training_meta.best_val_loss.unwrap(), model)
    }
}

fn prune_run(testbed: Testbed, seed: u64) -> Run {
    let cfg = PruneConfig { train: TrainConfig { seed, ..TrainConfig::default() }, ..PruneConfig::default() };
    let cfgs = TestbedConfigs::default().with_seed(seed);
    let dataset = generate_dataset(testbed, &cfgs, &DataConfig::default(), cfg.train.warmup_steps).unwrap();
    let outcome = prune_loop(&dataset, &cfg).unwrap();
    println!(
        "  {testbed} seed {seed}: final {:?}, stop {:?}, val losses {:?}",
        outcome.trace.final_channels,
        outcome.trace.stop_reason,
        outcome.trace.val_losses().iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
    );
    Run { seed, dataset, outcome, cfg }
}

fn expected_set(testbed: Testbed) -> BTreeSet<&'static str> {
    let [a, b, i, _] = testbed.signal_names();
    match testbed {
        Testbed::Mechanical => [a, b].into(),
        _ => [a, b, i].into(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

struct Verdicts(Vec<(u32, bool)>);

impl Verdicts {
    fn record(&mut self, n: u32, pass: bool, detail: String) {
        println!("criterion {n:>2} {}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push((n, pass));
    }
}

fn count(flags: &[bool]) -> usize {
    flags.iter().filter(|f| **f).count()
}

fn final_set_criterion(runs: &[Run], testbed: Testbed) -> (bool, String) {
    let want = expected_set(testbed);
    let hits: Vec<bool> = runs.iter().map(|r| r.final_set() == want).collect();
    let sets: Vec<String> = runs.iter().map(|r| format!("{:?}", r.final_set())).collect();
    (count(&hits) >= 2, format!("{testbed} final set {want:?} in {}/3 seeds; got {}", count(&hits), sets.join(" ")))
}

fn gradient_oracle() -> (bool, String) {
    let (mut worst, mut worst_abs): (f64, f64) = (0.0, 0.0);
    for case in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + case);
        let (h, d, n) = (rng.random_range(2..6), rng.random_range(1..4), 24);
        let mut params = LtcParameters::init(h, d, case).unwrap();
        params.values_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
        let names: Vec<String> = (0..d).map(|k| format!("u{k}")).collect();
        let data: Vec<f64> = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let target: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let inputs = ChannelMatrix::new(names.clone(), n, data).unwrap();
        let model = ObserverModel::new(params, names, 0.2, case);
        let skip = 4;

        let loss = |m: &ObserverModel| mse_loss(&forward(m, &inputs, None).unwrap().estimates, &target, skip).unwrap();
        let analytic: Vec<f64> = backward(&model, &inputs, &target, skip).unwrap().grads.values().collect();
        for (idx, a) in analytic.iter().enumerate() {
            let (mut plus, mut minus) = (model.clone(), model.clone());
            *plus.params.values_mut().nth(idx).unwrap() += 1e-5;
            *minus.params.values_mut().nth(idx).unwrap() -= 1e-5;
            let numeric = (loss(&plus) - loss(&minus)) / 2e-5;
            let err = (a - numeric).abs();
            if a.abs().max(numeric.abs()) > 1e-8 {
                worst = worst.max(err / a.abs().max(numeric.abs()));
            } else {
                worst_abs = worst_abs.max(err);
            }
        }
    }
    (
        worst < 1e-4 && worst_abs < 1e-8,
        format!("max relative error {worst:.2e}, max absolute error on near-zero components {worst_abs:.2e}"),
    )
}

fn rk4_order() -> (bool, String) {
    let omega = 8.0;
    let deriv = |_t: f64, y: &[f64]| vec![y[1], -omega * omega * y[0]];
    let dts = [4e-3, 2e-3, 1e-3];
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let steps = (10.0 / dt) as usize;
            let mut y = vec![1.0, 0.0];
            let mut worst: f64 = 0.0;
            for n in 0..steps {
                y = rk4_step(deriv, n as f64 * dt, &y, dt).unwrap();
                worst = worst.max((y[0] - (omega * (n + 1) as f64 * dt).cos()).abs());
            }
            worst
        })
        .collect();
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    ((3.7..=4.3).contains(&slope), format!("convergence slope {slope:.3}"))
}

fn conservation() -> (bool, String) {
    let m = MechanicalConfig { m: 1.0, k: 1.0, c: 0.0, x0: 1.0, v0: 0.0, force_amp: 0.0, duration: 10.0, dt: 1e-3, ..Default::default() };
    let r = simulate_mechanical(&m).unwrap();
    let energy = |n: usize| 0.5 * r.xdot[n].powi(2) + 0.5 * r.x[n].powi(2);
    let drift = (0..r.x.len()).map(|n| (energy(n) - energy(0)).abs() / energy(0)).fold(0.0, f64::max);

    let p = PredPreyConfig { alpha_amp: 0.0, alpha_noise_amp: 0.0, dt: 1e-3, ..Default::default() };
    let lv = simulate_predprey(&p).unwrap();
    let (a, b, d, g) = (p.alpha_base, p.beta, p.delta, p.gamma);
    let v = |n: usize| d * lv.prey[n] - g * lv.prey[n].ln() + b * lv.predator[n] - a * lv.predator[n].ln();
    let lv_drift = (0..lv.prey.len()).map(|n| (v(n) - v(0)).abs()).fold(0.0, f64::max) / p.duration;
    (
        drift < 1e-8 && lv_drift < 1e-6,
        format!("oscillator energy drift {drift:.2e}, Lotka-Volterra drift {lv_drift:.2e} per unit time"),
    )
}

fn causality_properties(all: &[(Testbed, Vec<Run>)]) -> (bool, String) {
    let mut ratios = (f64::INFINITY, f64::NEG_INFINITY);
    let mut passes_ok = true;
    let mut zero_ok = true;
    let spec = PerturbationSpec { epsilon: 1e-3, ..PerturbationSpec::default() };
    for (_, runs) in all {
        for run in runs {
            let mut model = run.outcome.iteration_models[0].clone();
            let warmup = run.cfg.train.warmup_steps;
            let small = causality_report(&model, &run.dataset, &spec, warmup).unwrap();
            let large = causality_report(&model, &run.dataset, &spec.with_epsilon(2e-3), warmup).unwrap();
            passes_ok &= small.forward_passes == model.input_dim() + 1;
            for e in &small.entries {
                let r = large.score(&e.name).unwrap() / e.score;
                ratios = (ratios.0.min(r), ratios.1.max(r));
            }
            let d = model.params.input_dim;
            for i in 0..model.params.hidden_size {
                model.params.w_in[i * d] = 0.0;
            }
            let blind = causality_report(&model, &run.dataset, &spec, warmup).unwrap();
            zero_ok &= blind.score(&model.channel_names[0]) == Some(0.0);
        }
    }
    let ratio_ok = ratios.0 >= 1.8 && ratios.1 <= 2.2;
    (
        ratio_ok && passes_ok && zero_ok,
        format!(
            "ignored channel exactly zero: {zero_ok}; score ratio range [{:.4}, {:.4}]; d+1 passes: {passes_ok}",
            ratios.0, ratios.1
        ),
    )
}

fn cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_ltc-prune")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    std::fs::read(a).unwrap() == std::fs::read(b).unwrap()
}

fn manifest_rerun() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    cli(&["generate", "--testbed", "mechanical", "--seed", "0", "--out", &p("gen_a")]);
    cli(&["prune", "--dataset", &p("gen_a/dataset.csv"), "--out", &p("prune_a")]);
    cli(&["generate", "--manifest", &p("gen_a/manifest.json"), "--out", &p("gen_b")]);
    cli(&["prune", "--manifest", &p("prune_a/manifest.json"), "--dataset", &p("gen_b/dataset.csv"), "--out", &p("prune_b")]);

    let pairs = [
        ("gen_a/dataset.csv", "gen_b/dataset.csv"),
        ("gen_a/dataset.meta.json", "gen_b/dataset.meta.json"),
        ("prune_a/trace.json", "prune_b/trace.json"),
        ("prune_a/model.json", "prune_b/model.json"),
    ];
    let differing: Vec<&str> =
        pairs.iter().filter(|(a, b)| !same_bytes(&dir.path().join(a), &dir.path().join(b))).map(|(a, _)| *a).collect();
    (differing.is_empty(), format!("dataset, trace and model reruns identical; differing: {differing:?}"))
}

#[test]
fn acceptance_criteria() {
    println!("pruning studies:");
    let all: Vec<(Testbed, Vec<Run>)> =
        Testbed::ALL.iter().map(|&tb| (tb, SEEDS.iter().map(|&s| prune_run(tb, s)).collect())).collect();
    let runs = |tb: Testbed| &all.iter().find(|(t, _)| *t == tb).unwrap().1;
    let mut v = Verdicts(Vec::new());

    let (ok, detail) = final_set_criterion(runs(Testbed::Mechanical), Testbed::Mechanical);
    v.record(1, ok, detail);

    let cstr = runs(Testbed::Cstr);
    let (sets_ok, sets) = final_set_criterion(cstr, Testbed::Cstr);
    let [f_in, vol, inter, _] = Testbed::Cstr.signal_names();
    let rises: Vec<f64> = cstr
        .iter()
        .map(|r| {
            let with = r.model_on(&[f_in, vol, inter]).0;
            let without = r.model_on(&[f_in, vol]).0;
            without / with - 1.0
        })
        .collect();
    let forced_ok = count(&rises.iter().map(|r| *r > 0.10).collect::<Vec<_>>()) >= 2;
    v.record(
        2,
        sets_ok && forced_ok,
        format!("{sets}; forced interaction removal raises val loss by {:?}", pct(&rises)),
    );

    let eco = runs(Testbed::PredPrey);
    let (sets_ok, sets) = final_set_criterion(eco, Testbed::PredPrey);
    let clean: Vec<&str> = expected_set(Testbed::PredPrey).into_iter().collect();
    let full = median(eco.iter().map(|r| r.outcome.trace.iterations[0].val_loss).collect());
    let pruned = median(eco.iter().map(|r| r.model_on(&clean).0).collect());
    let gain = 1.0 - pruned / full;
    v.record(
        3,
        sets_ok && gain >= 0.25,
        format!("{sets}; median val loss {full:.4} -> {pruned:.4} ({:.1}% better)", 100.0 * gain),
    );

    let mech = runs(Testbed::Mechanical);
    let separations: Vec<f64> = mech
        .iter()
        .map(|r| {
            let report = &r.outcome.trace.iterations[0].causality;
            let score_of = |kind: ChannelKind| {
                r.dataset.channels.iter().filter(move |c| c.meta.kind == kind).map(|c| report.score(&c.meta.name).unwrap())
            };
            let phys = score_of(ChannelKind::Physical).fold(f64::INFINITY, f64::min);
            let noise = score_of(ChannelKind::Noise).fold(0.0, f64::max);
            phys / noise
        })
        .collect();
    let sep_ok = count(&separations.iter().map(|s| *s >= 5.0).collect::<Vec<_>>()) >= 2;
    v.record(4, sep_ok, format!("min physical / max noise score per seed {:?}", fmt_all(&separations, 2)));

    let rmses: Vec<f64> = mech
        .iter()
        .map(|r| {
            let model = r.model_on(&Testbed::Mechanical.physical_channels()).1;
            evaluate(&model, &r.dataset, Segment::Test, r.cfg.train.warmup_steps).unwrap().rmse
        })
        .collect();
    let rmse_ok = count(&rmses.iter().map(|e| *e <= 0.10).collect::<Vec<_>>()) >= 2;
    v.record(5, rmse_ok, format!("two-input test rmse per seed {:?}", fmt_all(&rmses, 4)));

    let (ok, detail) = gradient_oracle();
    v.record(6, ok, detail);
    let (ok, detail) = rk4_order();
    v.record(7, ok, detail);
    let (ok, detail) = conservation();
    v.record(8, ok, detail);
    let (ok, detail) = causality_properties(&all);
    v.record(9, ok, detail);
    let (ok, detail) = manifest_rerun();
    v.record(10, ok, detail);

    let failed: Vec<u32> = v.0.iter().filter(|(_, p)| !p).map(|(n, _)| *n).collect();
    println!("seeds {:?}; {} of {} criteria pass", all[0].1.iter().map(|r| r.seed).collect::<Vec<_>>(), 10 - failed.len(), 10);
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

fn pct(v: &[f64]) -> Vec<String> {
    v.iter().map(|r| format!("{:.1}%", 100.0 * r)).collect()
}

fn fmt_all(v: &[f64], digits: usize) -> Vec<String> {
    v.iter().map(|x| format!("{x:.digits$}")).collect()
}
