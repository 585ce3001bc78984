//! Observer training: windowed truncated backpropagation, Adam with global
//! gradient clipping, early stopping on validation loss and multi-seed
//! selection.

mod adam;
mod backward;
mod loss;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{adam_update, clip_gradients, AdamState, ADAM_EPS, BETA1, BETA2};
pub use backward::{backward, backward_from, backward_weighted, Gradients};
pub use loss::mse_loss;

use crate::error::{Error, Result};
use crate::ltc::{forward, restrict_channels, LtcParameters, LtcState, ObserverModel, TrainingMeta};
use crate::testbed::{fmt_f64, write_json, Segment, TimeSeriesDataset};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub dt: f64,
    pub lr: f64,
    pub max_epochs: usize,
    pub clip_norm: f64,
    pub patience: usize,
    pub warmup_steps: usize,
    pub window_len: usize,
    pub window_stride: usize,
    pub n_seeds: usize,
    pub seed: u64,
    /// Start each training window from the state the model reaches at that
    /// point of the segment (computed once per epoch) instead of from zero.
    /// Only the first window then keeps the warm-up skip.
    pub carry_state: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_size: 32,
            dt: 0.05,
            lr: 1e-3,
            max_epochs: 100,
            clip_norm: 1.0,
            patience: 10,
            warmup_steps: 50,
            window_len: 128,
            window_stride: 64,
            n_seeds: 3,
            seed: 0,
            carry_state: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(Error::config("train.hidden_size", "must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("train.dt", "must be > 0"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("train.lr", "must be > 0"));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::config("train.clip_norm", "must be > 0"));
        }
        if self.window_len <= self.warmup_steps {
            return Err(Error::config("train.window_len", "must exceed warmup_steps"));
        }
        if self.window_stride == 0 {
            return Err(Error::config("train.window_stride", "must be >= 1"));
        }
        if self.n_seeds == 0 {
            return Err(Error::config("train.n_seeds", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStop {
    EarlyStop,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub channels: Vec<String>,
    pub seed: u64,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub stop_reason: TrainStop,
    /// Warm-up samples excluded from the loss of windows that start from a
    /// zero state.
    pub train_window_skip: usize,
    pub carry_state: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    /// Evaluated samples (segment length minus warm-up).
    pub samples: usize,
}

/// Start offsets of the training windows within a segment of `len` samples.
pub(crate) fn window_starts(len: usize, window_len: usize, stride: usize) -> Vec<usize> {
    if len <= window_len {
        return vec![0];
    }
    let mut starts: Vec<usize> = (0..).map(|k| k * stride).take_while(|s| s + window_len <= len).collect();
    let last = len - window_len;
    if *starts.last().unwrap() != last {
        starts.push(last);
    }
    starts
}

fn ordered_channels(dataset: &TimeSeriesDataset, channels: &[String]) -> Result<Vec<String>> {
    let names = dataset.channel_names();
    let cols = restrict_channels(&names, channels)?;
    Ok(cols.into_iter().map(|c| names[c].clone()).collect())
}

/// Trains one observer from `seed` on `channels` (kept in dataset order) and
/// returns the best-validation parameters.
pub fn train(
    dataset: &TimeSeriesDataset,
    channels: &[String],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ObserverModel, TrainReport)> {
    cfg.validate()?;
    if channels.is_empty() {
        return Err(Error::config("channels", "at least one input channel is required"));
    }
    let channels = ordered_channels(dataset, channels)?;
    let train_range = dataset.segment_range(Segment::Train);
    if train_range.len() <= cfg.warmup_steps {
        return Err(Error::SegmentTooShort { segment: "train".into(), len: train_range.len(), warmup: cfg.warmup_steps });
    }
    let inputs = dataset.segment_inputs(&channels, Segment::Train)?;
    let target = dataset.segment_target(Segment::Train);
    let windows: Vec<_> = window_starts(inputs.rows, cfg.window_len, cfg.window_stride)
        .into_iter()
        .map(|s| {
            let e = (s + cfg.window_len).min(inputs.rows);
            (s, inputs.slice_rows(s, e), &target[s..e])
        })
        .collect();

    let params = LtcParameters::init(cfg.hidden_size, channels.len(), seed)?;
    let mut model = ObserverModel::new(params, channels.clone(), cfg.dt, seed);
    let mut adam = AdamState::new(&model.params);

    let mut train_losses = Vec::new();
    let mut val_losses = Vec::new();
    let mut best = (f64::INFINITY, 0usize, model.params.clone());
    let mut stale = 0usize;
    let mut stop_reason = TrainStop::MaxEpochs;

    for epoch in 0..cfg.max_epochs {
        let mut epoch_loss = 0.0;
        let lead = if cfg.carry_state { Some(forward(&model, &inputs, None)?.hidden) } else { None };
        for (start, x, y) in &windows {
            let state;
            let (h0, skip) = match &lead {
                Some(hidden) if *start > 0 => {
                    let hs = cfg.hidden_size;
                    state = LtcState { h: hidden[(start - 1) * hs..start * hs].to_vec() };
                    (Some(&state), 0)
                }
                _ => (None, cfg.warmup_steps),
            };
            let Gradients { loss, mut grads } = backward_from(&model, x, y, skip, 1.0, h0)?;
            clip_gradients(&mut grads, cfg.clip_norm);
            adam_update(&mut model.params, &grads, &mut adam, cfg.lr);
            epoch_loss += loss;
        }
        train_losses.push(epoch_loss / windows.len() as f64);

        let val = evaluate(&model, dataset, Segment::Val, cfg.warmup_steps)?.mse;
        val_losses.push(val);
        if val < best.0 {
            best = (val, epoch, model.params.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience.max(1) {
                stop_reason = TrainStop::EarlyStop;
                break;
            }
        }
    }

    let (best_val_loss, best_epoch, best_params) = best;
    model.params = best_params;
    model.training_meta = TrainingMeta { epochs_run: train_losses.len(), best_val_loss: Some(best_val_loss) };
    let report = TrainReport {
        channels,
        seed,
        epochs_run: train_losses.len(),
        train_losses,
        val_losses,
        best_epoch,
        best_val_loss,
        stop_reason,
        train_window_skip: cfg.warmup_steps,
        carry_state: cfg.carry_state,
    };
    Ok((model, report))
}

/// MSE and RMSE over a segment, from a fresh zero state, excluding the first
/// `warmup` samples. Units are those of the standardized target.
pub fn evaluate(model: &ObserverModel, dataset: &TimeSeriesDataset, segment: Segment, warmup: usize) -> Result<Metrics> {
    let (pred, truth) = predict_segment(model, dataset, segment)?;
    if pred.len() <= warmup {
        return Err(Error::SegmentTooShort { segment: segment.name().into(), len: pred.len(), warmup });
    }
    let mse = mse_loss(&pred, truth, warmup)?;
    Ok(Metrics { mse, rmse: mse.sqrt(), samples: pred.len() - warmup })
}

/// Model estimates over a segment (fresh zero state) and the aligned target.
pub fn predict_segment<'a>(
    model: &ObserverModel,
    dataset: &'a TimeSeriesDataset,
    segment: Segment,
) -> Result<(Vec<f64>, &'a [f64])> {
    let inputs = dataset.segment_inputs(&model.channel_names, segment)?;
    Ok((forward(model, &inputs, None)?.estimates, dataset.segment_target(segment)))
}

/// Trains `cfg.n_seeds` models with seeds `cfg.seed, cfg.seed + 1, ...` and
/// keeps the one with the lowest best validation loss (lower seed on ties).
pub fn multi_seed_train(
    dataset: &TimeSeriesDataset,
    channels: &[String],
    cfg: &TrainConfig,
) -> Result<(ObserverModel, Vec<TrainReport>)> {
    cfg.validate()?;
    let runs: Vec<(ObserverModel, TrainReport)> = (0..cfg.n_seeds as u64)
        .into_par_iter()
        .map(|k| train(dataset, channels, cfg, cfg.seed + k))
        .collect::<Result<_>>()?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.1.best_val_loss.total_cmp(&b.1.best_val_loss).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .expect("at least one seed");
    let reports = runs.iter().map(|(_, r)| r.clone()).collect();
    let model = runs.into_iter().nth(best).map(|(m, _)| m).expect("index in range");
    Ok((model, reports))
}

pub fn write_train_report(report: &TrainReport, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct File<'a> {
        schema_version: u32,
        #[serde(flatten)]
        report: &'a TrainReport,
    }
    write_json(path, &File { schema_version: SCHEMA_VERSION, report })
}

/// `epoch,train_loss,val_loss` rows.
pub fn write_loss_history(report: &TrainReport, path: &Path) -> Result<()> {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for (e, (tl, vl)) in report.train_losses.iter().zip(&report.val_losses).enumerate() {
        out.push_str(&format!("{e},{},{}\n", fmt_f64(*tl), fmt_f64(*vl)));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
