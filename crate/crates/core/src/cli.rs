//! The `ltc-prune` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::causality::{causality_report, write_causality_csv, write_causality_json};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ltc::{read_model, write_model, ObserverModel};
use crate::pruner::{prune_loop, write_trace, PruneTrace};
use crate::report::{render_chart, render_charts, summary_table, Artifact, ChartKind, ChartOutcome, RunManifest};
use crate::testbed::{
    fmt_f64, generate_dataset, read_dataset, read_json, write_dataset, write_json, Segment, Testbed, TimeSeriesDataset,
};
use crate::train::{evaluate, multi_seed_train, predict_segment, write_loss_history, write_train_report, TrainReport};
use crate::SCHEMA_VERSION;

#[derive(Debug, Parser)]
#[command(name = "ltc-prune", version, about = "Causality-guided sensor pruning with LTC observers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a testbed and write its dataset.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        testbed: Option<Testbed>,
    },
    /// Train an observer (best of several seeds).
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Comma-separated input channels; all channels when omitted.
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<String>>,
    },
    /// Score every input channel of a trained model.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        segment: Option<Segment>,
    },
    /// Run the train, score, prune loop.
    Prune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Metrics and predictions of a model on one segment.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        segment: Segment,
    },
    /// Render charts and the pruning summary for a run directory.
    Report {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the testbed seed (generate) or the base training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Rerun with the configuration and inputs recorded in this manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

/// Loaded configuration plus the manifest it came from, if any.
struct Setup {
    config: RunConfig,
    manifest: Option<RunManifest>,
    out: PathBuf,
}

impl Setup {
    fn new(common: &Common) -> Result<Self> {
        let manifest = common.manifest.as_deref().map(RunManifest::load).transpose()?;
        let config = match (&manifest, &common.config) {
            (_, Some(path)) => RunConfig::load(path)?,
            (Some(m), None) => m.config.clone(),
            (None, None) => RunConfig::default(),
        };
        std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
        Ok(Self { config, manifest, out: common.out.clone() })
    }

    /// An explicit flag, else the manifest's recorded input.
    fn input(&self, flag: &Option<PathBuf>, kind: &str) -> Result<PathBuf> {
        flag.clone()
            .or_else(|| self.manifest.as_ref().and_then(|m| m.input(kind)).map(Path::to_path_buf))
            .ok_or_else(|| Error::config(kind, format!("--{kind} is required")))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// `data.csv` pairs with `data.meta.json`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

fn load_dataset(csv: &Path) -> Result<TimeSeriesDataset> {
    if !csv.exists() {
        return Err(Error::Data { path: csv.to_path_buf(), message: "dataset file not found".into() });
    }
    let ds = read_dataset(csv, &meta_path(csv))?;
    ds.validate()?;
    Ok(ds)
}

fn load_model(path: &Path) -> Result<ObserverModel> {
    if !path.exists() {
        return Err(Error::Data { path: path.to_path_buf(), message: "model file not found".into() });
    }
    read_model(path)
}

fn dataset_inputs(csv: &Path) -> Vec<Artifact> {
    vec![
        Artifact { kind: "dataset".into(), path: csv.to_path_buf() },
        Artifact { kind: "dataset_meta".into(), path: meta_path(csv) },
    ]
}

fn note_charts(manifest: &mut RunManifest, outcome: ChartOutcome) {
    for path in outcome.written {
        manifest.add("chart", path);
    }
    for warning in outcome.warnings {
        eprintln!("warning: {warning}");
        manifest.warnings.push(warning);
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate { common, testbed } => generate(&common, testbed),
        Command::Train { common, dataset, channels } => train(&common, &dataset, channels),
        Command::Analyze { common, model, dataset, segment } => analyze(&common, &model, &dataset, segment),
        Command::Prune { common, dataset, max_iters } => prune(&common, &dataset, max_iters),
        Command::Evaluate { common, model, dataset, segment } => evaluate_cmd(&common, &model, &dataset, segment),
        Command::Report { out } => report(&out),
    }
}

fn generate(common: &Common, testbed: Option<Testbed>) -> Result<()> {
    let mut setup = Setup::new(common)?;
    let testbed = testbed
        .or_else(|| setup.manifest.as_ref().and_then(|m| m.testbed))
        .ok_or_else(|| Error::config("testbed", "--testbed is required"))?;
    if let Some(seed) = common.seed {
        setup.config.testbeds = setup.config.testbeds.clone().with_seed(seed);
    }
    setup.config.validate()?;
    let cfg = &setup.config;
    let ds = generate_dataset(testbed, &cfg.testbeds, &cfg.data, cfg.train.warmup_steps)?;
    let csv = setup.path("dataset.csv");
    write_dataset(&ds, &csv, &meta_path(&csv))?;

    let mut manifest = RunManifest::new("generate", Some(testbed), setup.config.clone(), Vec::new());
    manifest.add("dataset", &csv);
    manifest.add("dataset_meta", meta_path(&csv));
    manifest.finish(&setup.path("manifest.json"))?;
    println!("{}: {} samples, channels {}", csv.display(), ds.len(), ds.channel_names().join(", "));
    Ok(())
}

fn train(common: &Common, dataset: &Option<PathBuf>, channels: Option<Vec<String>>) -> Result<()> {
    let mut setup = Setup::new(common)?;
    if let Some(seed) = common.seed {
        setup.config.train.seed = seed;
    }
    setup.config.validate()?;
    let csv = setup.input(dataset, "dataset")?;
    let ds = load_dataset(&csv)?;
    let channels = channels.unwrap_or_else(|| ds.channel_names());

    let (model, reports) = multi_seed_train(&ds, &channels, &setup.config.train)?;
    let selected = selected_report(&reports, model.seed);
    let mut manifest = RunManifest::new("train", ds.testbed, setup.config.clone(), dataset_inputs(&csv));
    write_model(&model, &setup.path("model.json"))?;
    write_train_report(selected, &setup.path("train_report.json"))?;
    write_json(&setup.path("train_reports.json"), &SeedReports { schema_version: SCHEMA_VERSION, reports: &reports })?;
    write_loss_history(selected, &setup.path("loss_history.csv"))?;
    for (kind, name) in [("model", "model.json"), ("train_report", "train_report.json"), ("train_reports", "train_reports.json"), ("loss_history", "loss_history.csv")] {
        manifest.add(kind, setup.path(name));
    }
    note_charts(&mut manifest, render_chart(ChartKind::Loss, &setup.out, "Loss history"));
    manifest.finish(&setup.path("manifest.json"))?;
    println!("seed {} selected, best validation loss {:.6e}", model.seed, selected.best_val_loss);
    Ok(())
}

#[derive(serde::Serialize)]
struct SeedReports<'a> {
    schema_version: u32,
    reports: &'a [TrainReport],
}

fn selected_report(reports: &[TrainReport], seed: u64) -> &TrainReport {
    reports.iter().find(|r| r.seed == seed).expect("selected seed has a report")
}

fn analyze(common: &Common, model: &Option<PathBuf>, dataset: &Option<PathBuf>, segment: Option<Segment>) -> Result<()> {
    let mut setup = Setup::new(common)?;
    if let Some(segment) = segment {
        setup.config.perturbation.segment = segment;
    }
    setup.config.validate()?;
    let model_path = setup.input(model, "model")?;
    let csv = setup.input(dataset, "dataset")?;
    let model = load_model(&model_path)?;
    let ds = load_dataset(&csv)?;
    let report = causality_report(&model, &ds, &setup.config.perturbation, setup.config.train.warmup_steps)?;

    let mut inputs = dataset_inputs(&csv);
    inputs.push(Artifact { kind: "model".into(), path: model_path });
    let mut manifest = RunManifest::new("analyze", ds.testbed, setup.config.clone(), inputs);
    write_causality_json(&report, &setup.path("causality.json"))?;
    write_causality_csv(&report, &setup.path("causality.csv"))?;
    manifest.add("causality", setup.path("causality.json"));
    manifest.add("causality_csv", setup.path("causality.csv"));
    note_charts(&mut manifest, render_chart(ChartKind::Causality, &setup.out, "Causality scores"));
    manifest.finish(&setup.path("manifest.json"))?;
    for e in &report.entries {
        println!("{:>3}  {:<24} {:.6e}", e.rank, e.name, e.score);
    }
    Ok(())
}

fn prune(common: &Common, dataset: &Option<PathBuf>, max_iters: Option<usize>) -> Result<()> {
    let mut setup = Setup::new(common)?;
    if let Some(seed) = common.seed {
        setup.config.train.seed = seed;
    }
    if let Some(max_iters) = max_iters {
        setup.config.prune.max_iters = max_iters;
    }
    setup.config.validate()?;
    let csv = setup.input(dataset, "dataset")?;
    let ds = load_dataset(&csv)?;
    let outcome = prune_loop(&ds, &setup.config.prune_config())?;
    let trace = &outcome.trace;

    let mut manifest = RunManifest::new("prune", ds.testbed, setup.config.clone(), dataset_inputs(&csv));
    for (rec, model) in trace.iterations.iter().zip(&outcome.iteration_models) {
        let dir = setup.path(&format!("iteration_{}", rec.iteration));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_model(model, &dir.join("model.json"))?;
        write_causality_json(&rec.causality, &dir.join("causality.json"))?;
        write_causality_csv(&rec.causality, &dir.join("causality.csv"))?;
        write_loss_history(selected_report(&rec.train_reports, rec.selected_seed), &dir.join("loss_history.csv"))?;
        for name in ["model.json", "causality.json", "causality.csv", "loss_history.csv"] {
            manifest.add(&format!("iteration_{}/{name}", rec.iteration), dir.join(name));
        }
    }
    write_trace(trace, &setup.path("trace.json"))?;
    write_model(&outcome.model, &setup.path("model.json"))?;
    write_predictions(&outcome.model, &ds, Segment::Test, &setup.path("predictions.csv"))?;
    std::fs::write(setup.path("summary.md"), summary_table(ds.testbed, trace)).map_err(|e| Error::io(setup.path("summary.md"), e))?;
    for (kind, name) in [("trace", "trace.json"), ("model", "model.json"), ("predictions", "predictions.csv"), ("summary", "summary.md")] {
        manifest.add(kind, setup.path(name));
    }
    note_charts(&mut manifest, render_charts(&setup.out));
    manifest.finish(&setup.path("manifest.json"))?;
    print!("{}", summary_table(ds.testbed, trace));
    Ok(())
}

/// `t,truth,prediction` for every sample of the segment.
fn write_predictions(model: &ObserverModel, ds: &TimeSeriesDataset, segment: Segment, path: &Path) -> Result<()> {
    let (pred, truth) = predict_segment(model, ds, segment)?;
    let t = &ds.t[ds.segment_range(segment)];
    let mut out = String::from("t,truth,prediction\n");
    for ((t, y), p) in t.iter().zip(truth).zip(&pred) {
        out.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(*y), fmt_f64(*p)));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(serde::Serialize)]
struct MetricsFile {
    schema_version: u32,
    model_identity: String,
    segment: Segment,
    warmup_steps: usize,
    samples: usize,
    standardized: MetricPair,
    /// In the target's physical units, via its stored mean and deviation.
    destandardized: MetricPair,
}

#[derive(serde::Serialize)]
struct MetricPair {
    mse: f64,
    rmse: f64,
}

fn evaluate_cmd(common: &Common, model: &Option<PathBuf>, dataset: &Option<PathBuf>, segment: Segment) -> Result<()> {
    let setup = Setup::new(common)?;
    setup.config.validate()?;
    let model_path = setup.input(model, "model")?;
    let csv = setup.input(dataset, "dataset")?;
    let model = load_model(&model_path)?;
    let ds = load_dataset(&csv)?;
    let warmup = setup.config.train.warmup_steps;
    let metrics = evaluate(&model, &ds, segment, warmup)?;
    let sigma = ds.target.meta.sigma;

    let mut inputs = dataset_inputs(&csv);
    inputs.push(Artifact { kind: "model".into(), path: model_path });
    let mut manifest = RunManifest::new("evaluate", ds.testbed, setup.config.clone(), inputs);
    let file = MetricsFile {
        schema_version: SCHEMA_VERSION,
        model_identity: model.identity(),
        segment,
        warmup_steps: warmup,
        samples: metrics.samples,
        standardized: MetricPair { mse: metrics.mse, rmse: metrics.rmse },
        destandardized: MetricPair { mse: metrics.mse * sigma * sigma, rmse: metrics.rmse * sigma },
    };
    write_json(&setup.path("metrics.json"), &file)?;
    write_predictions(&model, &ds, segment, &setup.path("predictions.csv"))?;
    manifest.add("metrics", setup.path("metrics.json"));
    manifest.add("predictions", setup.path("predictions.csv"));
    note_charts(&mut manifest, render_chart(ChartKind::Prediction, &setup.out, "Prediction vs truth"));
    manifest.finish(&setup.path("manifest.json"))?;
    println!("{} rmse {:.6} (standardized), {:.6} (physical)", segment.name(), metrics.rmse, metrics.rmse * sigma);
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::Data { path: dir.to_path_buf(), message: "run directory not found".into() });
    }
    let run_manifest = dir.join("manifest.json");
    let (config, testbed) = match run_manifest.exists() {
        true => {
            let m = RunManifest::load(&run_manifest)?;
            (m.config, m.testbed)
        }
        false => (RunConfig::default(), None),
    };
    let mut manifest = RunManifest::new("report", testbed, config, Vec::new());
    let trace_path = dir.join("trace.json");
    if trace_path.exists() {
        let trace: PruneTrace = read_json(&trace_path)?;
        std::fs::write(dir.join("summary.md"), summary_table(testbed, &trace)).map_err(|e| Error::io(dir.join("summary.md"), e))?;
        manifest.add("summary", dir.join("summary.md"));
    }
    note_charts(&mut manifest, render_charts(dir));
    let m = manifest.finish(&dir.join("report.manifest.json"))?;
    println!("{} charts, {} warnings", m.artifacts.iter().filter(|a| a.kind == "chart").count(), m.warnings.len());
    Ok(())
}
