//! Causality-guided sensor pruning: train, score, remove low-influence
//! channels, retrain, and stop once validation loss degrades or the sensor
//! budget is reached.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::causality::{causality_report, CausalityReport, PerturbationSpec};
use crate::error::{Error, Result};
use crate::ltc::ObserverModel;
use crate::testbed::{write_json, TimeSeriesDataset};
use crate::train::{multi_seed_train, TrainConfig, TrainReport};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Threshold is `threshold_tau * max score`.
    Relative,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    pub threshold_mode: ThresholdMode,
    pub threshold_tau: f64,
    /// Largest tolerated relative increase of the best validation loss over
    /// the best seen so far.
    pub degradation_tol: f64,
    pub min_sensors: usize,
    pub max_iters: usize,
    #[serde(skip)]
    pub spec: PerturbationSpec,
    #[serde(skip)]
    pub train: TrainConfig,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            threshold_mode: ThresholdMode::Relative,
            threshold_tau: 0.05,
            degradation_tol: 0.10,
            min_sensors: 1,
            max_iters: 10,
            spec: PerturbationSpec::default(),
            train: TrainConfig::default(),
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_tau > 0.0) {
            return Err(Error::config("prune.threshold_tau", "must be > 0"));
        }
        if !(self.degradation_tol >= 0.0) {
            return Err(Error::config("prune.degradation_tol", "must be >= 0"));
        }
        if self.min_sensors == 0 {
            return Err(Error::config("prune.min_sensors", "must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("prune.max_iters", "must be >= 1"));
        }
        self.train.validate()
    }

    pub fn effective_threshold(&self, report: &CausalityReport) -> f64 {
        match self.threshold_mode {
            ThresholdMode::Relative => self.threshold_tau * report.max_score(),
            ThresholdMode::Absolute => self.threshold_tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Channels to drop, lowest score first.
    pub remove: Vec<String>,
    pub no_removable: bool,
}

/// Channels scoring below the threshold, or the single weakest channel when
/// none does, trimmed so at least `min_sensors` survive.
pub fn select_prunable(report: &CausalityReport, cfg: &PruneConfig) -> Selection {
    let d = report.entries.len();
    if d <= cfg.min_sensors {
        return Selection { remove: Vec::new(), no_removable: true };
    }
    let mut ascending: Vec<_> = report.entries.iter().collect();
    ascending.sort_by(|a, b| a.score.total_cmp(&b.score).then_with(|| a.name.cmp(&b.name)));

    let threshold = cfg.effective_threshold(report);
    let mut remove: Vec<String> =
        ascending.iter().filter(|e| e.score < threshold).map(|e| e.name.clone()).collect();
    if remove.is_empty() {
        remove.push(ascending[0].name.clone());
    }
    remove.truncate(d - cfg.min_sensors);
    Selection { remove, no_removable: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    Continue,
    Degradation,
    Budget,
    MaxIters,
}

/// Degradation when the latest loss exceeds `(1 + tol)` times the best
/// earlier loss; then the sensor budget; then the iteration cap.
pub fn stop_check(history: &[f64], active: usize, cfg: &PruneConfig) -> StopDecision {
    if degraded(history, cfg.degradation_tol) {
        StopDecision::Degradation
    } else if active <= cfg.min_sensors {
        StopDecision::Budget
    } else if history.len() >= cfg.max_iters {
        StopDecision::MaxIters
    } else {
        StopDecision::Continue
    }
}

/// The pure loss-history test behind [`stop_check`].
pub fn degraded(history: &[f64], tol: f64) -> bool {
    match history.split_last() {
        Some((latest, earlier)) if !earlier.is_empty() => {
            let best = earlier.iter().copied().fold(f64::INFINITY, f64::min);
            *latest > (1.0 + tol) * best
        }
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneStop {
    Degradation,
    Budget,
    MaxIters,
    NoRemovable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub channels: Vec<String>,
    /// Channels dropped to reach this iteration's set.
    pub removed: Vec<String>,
    pub val_loss: f64,
    pub selected_seed: u64,
    pub model_identity: String,
    pub train_reports: Vec<TrainReport>,
    pub causality: CausalityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    pub iterations: Vec<IterationRecord>,
    pub stop_reason: PruneStop,
    /// Iteration whose model is returned: the last one before degradation.
    pub final_iteration: usize,
    pub final_channels: Vec<String>,
    pub final_model_identity: String,
    /// Iteration with the lowest validation loss (may differ from `final_iteration`).
    pub best_iteration: usize,
    pub config: PruneConfigSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneConfigSnapshot {
    pub prune: PruneConfig,
    pub spec: PerturbationSpec,
    pub train: TrainConfig,
}

impl PruneTrace {
    pub fn val_losses(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.val_loss).collect()
    }
}

pub struct PruneOutcome {
    pub model: ObserverModel,
    pub trace: PruneTrace,
    /// Selected model of every iteration, in order.
    pub iteration_models: Vec<ObserverModel>,
}

/// Runs the pruning loop on `dataset` starting from all of its channels.
pub fn prune_loop(dataset: &TimeSeriesDataset, cfg: &PruneConfig) -> Result<PruneOutcome> {
    prune_from(dataset, &dataset.channel_names(), cfg)
}

/// Runs the pruning loop starting from `initial` channels.
pub fn prune_from(dataset: &TimeSeriesDataset, initial: &[String], cfg: &PruneConfig) -> Result<PruneOutcome> {
    cfg.validate()?;
    if initial.len() < cfg.min_sensors {
        return Err(Error::config(
            "prune.min_sensors",
            format!("dataset offers {} channels, budget is {}", initial.len(), cfg.min_sensors),
        ));
    }
    let warmup = cfg.train.warmup_steps;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut models: Vec<ObserverModel> = Vec::new();
    let mut active: Vec<String> = initial.to_vec();
    let mut removed: Vec<String> = Vec::new();

    let stop_reason = loop {
        let (model, reports) = multi_seed_train(dataset, &active, &cfg.train)?;
        let causality = causality_report(&model, dataset, &cfg.spec, warmup)?;
        let val_loss = model.training_meta.best_val_loss.unwrap_or(f64::INFINITY);
        records.push(IterationRecord {
            iteration: records.len(),
            channels: model.channel_names.clone(),
            removed: std::mem::take(&mut removed),
            val_loss,
            selected_seed: model.seed,
            model_identity: model.identity(),
            train_reports: reports,
            causality,
        });
        active = model.channel_names.clone();
        models.push(model);

        let history: Vec<f64> = records.iter().map(|r| r.val_loss).collect();
        match stop_check(&history, active.len(), cfg) {
            StopDecision::Degradation => break PruneStop::Degradation,
            StopDecision::Budget => break PruneStop::Budget,
            StopDecision::MaxIters => break PruneStop::MaxIters,
            StopDecision::Continue => {}
        }

        let selection = select_prunable(&records.last().expect("one record").causality, cfg);
        if selection.no_removable || selection.remove.is_empty() {
            break PruneStop::NoRemovable;
        }
        active.retain(|c| !selection.remove.contains(c));
        removed = selection.remove;
    };

    let last = records.len() - 1;
    let final_iteration = if stop_reason == PruneStop::Degradation { last - 1 } else { last };
    let best_iteration = records
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.val_loss.total_cmp(&b.1.val_loss).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let model = models[final_iteration].clone();
    let trace = PruneTrace {
        stop_reason,
        final_iteration,
        final_channels: model.channel_names.clone(),
        final_model_identity: model.identity(),
        best_iteration,
        config: PruneConfigSnapshot { prune: cfg.clone(), spec: cfg.spec.clone(), train: cfg.train.clone() },
        iterations: records,
    };
    Ok(PruneOutcome { model, trace, iteration_models: models })
}

pub fn write_trace(trace: &PruneTrace, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct File<'a> {
        schema_version: u32,
        #[serde(flatten)]
        trace: &'a PruneTrace,
    }
    write_json(path, &File { schema_version: SCHEMA_VERSION, trace })
}
