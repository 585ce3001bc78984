//! Perturbation-based causality scores.
//!
//! Each input channel is shifted by a constant `epsilon` (in standardized
//! units) over the whole segment. The score is the time average of the
//! absolute deviation between perturbed and baseline estimates over the
//! evaluation window.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltc::{bind_columns, forward, ObserverModel};
use crate::testbed::{fmt_f64, write_json, ChannelMatrix, Segment, TimeSeriesDataset};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    /// First scored index within the segment; `None` means the training warm-up.
    pub window_start: Option<usize>,
    /// Scored horizon; `None` means the rest of the segment.
    pub window_len: Option<usize>,
    pub segment: Segment,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { epsilon: 5e-3, window_start: None, window_len: None, segment: Segment::Val }
    }
}

impl PerturbationSpec {
    /// Recommended magnitude range.
    pub const EPSILON_RANGE: (f64, f64) = (1e-3, 1e-2);

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon != 0.0) {
            return Err(Error::config("perturbation.epsilon", "must be finite and nonzero"));
        }
        if self.window_len == Some(0) {
            return Err(Error::config("perturbation.window_len", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    /// `[start, start + len)` for a segment of `segment_len` samples.
    pub fn window(&self, segment_len: usize, warmup: usize) -> Result<(usize, usize)> {
        let start = self.window_start.unwrap_or(warmup);
        let len = match self.window_len {
            Some(len) => len,
            None => segment_len.saturating_sub(start),
        };
        if len == 0 || start + len > segment_len {
            return Err(Error::Window { start, len, segment_len });
        }
        Ok((start, len))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityEntry {
    pub name: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    /// Ordered by rank (descending score, ties by name).
    pub entries: Vec<CausalityEntry>,
    pub spec: PerturbationSpec,
    pub model_identity: String,
    pub segment: Segment,
    pub window_start: usize,
    pub window_len: usize,
    pub forward_passes: usize,
}

impl CausalityReport {
    pub fn score(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.score)
    }

    pub fn max_score(&self) -> f64 {
        self.entries.iter().map(|e| e.score).fold(0.0, f64::max)
    }

    pub fn names_by_rank(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

/// Copy of `inputs` with column `j` shifted by `epsilon` at every row.
pub fn perturb_channel(inputs: &ChannelMatrix, j: usize, epsilon: f64) -> Result<ChannelMatrix> {
    let d = inputs.dim();
    if j >= d {
        return Err(Error::ChannelIndex { index: j, dim: d });
    }
    let mut out = inputs.clone();
    for row in out.data.chunks_exact_mut(d) {
        row[j] += epsilon;
    }
    Ok(out)
}

/// `x_perturbed(t_n) - x(t_n)`, both runs starting from a zero state. `j`
/// indexes the model's channels.
pub fn trajectory_delta(model: &ObserverModel, inputs: &ChannelMatrix, j: usize, epsilon: f64) -> Result<Vec<f64>> {
    let base = forward(model, inputs, None)?.estimates;
    perturbed_delta(model, inputs, &base, j, epsilon)
}

fn perturbed_delta(
    model: &ObserverModel,
    inputs: &ChannelMatrix,
    baseline: &[f64],
    j: usize,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if j >= model.channel_names.len() {
        return Err(Error::ChannelIndex { index: j, dim: model.channel_names.len() });
    }
    let col = bind_columns(&model.channel_names, inputs)?[j];
    let shifted = perturb_channel(inputs, col, epsilon)?;
    let perturbed = forward(model, &shifted, None)?.estimates;
    Ok(perturbed.iter().zip(baseline).map(|(p, b)| p - b).collect())
}

/// Mean absolute deviation over `[start, start + len)`.
pub fn window_score(delta: &[f64], start: usize, len: usize) -> Result<f64> {
    if len == 0 || start + len > delta.len() {
        return Err(Error::Window { start, len, segment_len: delta.len() });
    }
    Ok(delta[start..start + len].iter().map(|v| v.abs()).sum::<f64>() / len as f64)
}

/// Score of model channel `j` on the segment named by `spec`.
pub fn causality_score(
    model: &ObserverModel,
    dataset: &TimeSeriesDataset,
    j: usize,
    spec: &PerturbationSpec,
    warmup: usize,
) -> Result<f64> {
    let inputs = dataset.segment_inputs(&model.channel_names, spec.segment)?;
    let (start, len) = spec.window(inputs.rows, warmup)?;
    let delta = trajectory_delta(model, &inputs, j, spec.epsilon)?;
    window_score(&delta, start, len)
}

/// One baseline pass plus one perturbed pass per channel, ranked.
pub fn causality_report(
    model: &ObserverModel,
    dataset: &TimeSeriesDataset,
    spec: &PerturbationSpec,
    warmup: usize,
) -> Result<CausalityReport> {
    let inputs = dataset.segment_inputs(&model.channel_names, spec.segment)?;
    causality_report_on(model, &inputs, spec, warmup)
}

/// As [`causality_report`] on an explicit input block.
pub fn causality_report_on(
    model: &ObserverModel,
    inputs: &ChannelMatrix,
    spec: &PerturbationSpec,
    warmup: usize,
) -> Result<CausalityReport> {
    let (start, len) = spec.window(inputs.rows, warmup)?;
    let passes = AtomicUsize::new(0);
    let run = |m: &ObserverModel, x: &ChannelMatrix| {
        passes.fetch_add(1, Ordering::Relaxed);
        forward(m, x, None).map(|f| f.estimates)
    };

    let baseline = run(model, inputs)?;
    let cols = bind_columns(&model.channel_names, inputs)?;
    let scores: Vec<f64> = cols
        .par_iter()
        .map(|&col| {
            let shifted = perturb_channel(inputs, col, spec.epsilon)?;
            let perturbed = run(model, &shifted)?;
            let delta: Vec<f64> = perturbed.iter().zip(&baseline).map(|(p, b)| p - b).collect();
            window_score(&delta, start, len)
        })
        .collect::<Result<_>>()?;

    let mut entries: Vec<CausalityEntry> = model
        .channel_names
        .iter()
        .zip(scores)
        .map(|(name, score)| CausalityEntry { name: name.clone(), score, rank: 0 })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.name.cmp(&b.name)));
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }

    Ok(CausalityReport {
        entries,
        spec: spec.clone(),
        model_identity: model.identity(),
        segment: spec.segment,
        window_start: start,
        window_len: len,
        forward_passes: passes.into_inner(),
    })
}

pub fn write_causality_json(report: &CausalityReport, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct File<'a> {
        schema_version: u32,
        #[serde(flatten)]
        report: &'a CausalityReport,
    }
    write_json(path, &File { schema_version: SCHEMA_VERSION, report })
}

/// `name,score,rank` rows in rank order.
pub fn write_causality_csv(report: &CausalityReport, path: &Path) -> Result<()> {
    let mut out = String::from("name,score,rank\n");
    for e in &report.entries {
        out.push_str(&format!("{},{},{}\n", e.name, fmt_f64(e.score), e.rank));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltc::LtcParameters;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn inputs(rows: usize, d: usize) -> ChannelMatrix {
        let data = (0..rows * d).map(|i| ((i as f64) * 0.37).sin()).collect();
        ChannelMatrix::new((0..d).map(|k| format!("c{k}")).collect(), rows, data).unwrap()
    }

    fn model(d: usize, seed: u64) -> ObserverModel {
        ObserverModel::new(LtcParameters::init(6, d, seed).unwrap(), (0..d).map(|k| format!("c{k}")).collect(), 0.05, seed)
    }

    #[test]
    fn perturbation_examples() {
        let x = inputs(20, 3);
        assert_eq!(perturb_channel(&x, 1, 0.0).unwrap(), x);
        let p = perturb_channel(&x, 1, 0.25).unwrap();
        for n in 0..20 {
            assert_eq!(p.row(n)[0], x.row(n)[0]);
            assert_eq!(p.row(n)[2], x.row(n)[2]);
            assert_eq!(p.row(n)[1], x.row(n)[1] + 0.25);
        }
        let jk = perturb_channel(&perturb_channel(&x, 0, 0.1).unwrap(), 2, -0.3).unwrap();
        let kj = perturb_channel(&perturb_channel(&x, 2, -0.3).unwrap(), 0, 0.1).unwrap();
        assert_eq!(jk, kj);
        assert!(matches!(perturb_channel(&x, 3, 0.1), Err(Error::ChannelIndex { .. })));
    }

    #[test]
    fn zero_epsilon_gives_zero_delta() {
        let m = model(3, 1);
        let delta = trajectory_delta(&m, &inputs(80, 3), 2, 0.0).unwrap();
        assert!(delta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ignored_channel_scores_exactly_zero() {
        let mut m = model(3, 2);
        for i in 0..6 {
            m.params.w_in[i * 3 + 1] = 0.0;
        }
        let x = inputs(120, 3);
        let delta = trajectory_delta(&m, &x, 1, 5e-3).unwrap();
        assert!(delta.iter().all(|&v| v == 0.0));
        let report = causality_report_on(&m, &x, &PerturbationSpec::default(), 20).unwrap();
        assert_eq!(report.score("c1"), Some(0.0));
        assert!(report.score("c0").unwrap() > 0.0);
    }

    #[test]
    fn constant_deviation_scores_its_magnitude() {
        assert_eq!(window_score(&[9.0, -0.5, -0.5, -0.5], 1, 3).unwrap(), 0.5);
        assert!(matches!(window_score(&[1.0], 0, 0), Err(Error::Window { .. })));
        assert!(matches!(window_score(&[1.0, 2.0], 1, 2), Err(Error::Window { .. })));
    }

    #[test]
    fn report_ranks_and_counts_passes() {
        let m = model(4, 3);
        let x = inputs(150, 4);
        let r = causality_report_on(&m, &x, &PerturbationSpec::default(), 50).unwrap();
        assert_eq!(r.forward_passes, 5);
        assert_eq!((r.window_start, r.window_len), (50, 100));
        let ranks: Vec<usize> = r.entries.iter().map(|e| e.rank).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
        assert!(r.entries.windows(2).all(|w| w[0].score >= w[1].score));
        assert!(r.entries.iter().all(|e| e.score >= 0.0));
        assert_eq!(r, causality_report_on(&m, &x, &PerturbationSpec::default(), 50).unwrap());
    }

    #[test]
    fn single_channel_report() {
        let m = model(1, 4);
        let r = causality_report_on(&m, &inputs(100, 1), &PerturbationSpec::default(), 10).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.entries[0].rank, 1);
        assert_eq!(r.forward_passes, 2);
    }

    #[test]
    fn ties_rank_alphabetically() {
        let mut m = ObserverModel::new(LtcParameters::init(4, 3, 0).unwrap(), names(&["b", "a", "c"]), 0.05, 0);
        m.params.w_in.iter_mut().for_each(|w| *w = 0.0);
        let x = ChannelMatrix::new(names(&["b", "a", "c"]), 60, vec![0.1; 180]).unwrap();
        let r = causality_report_on(&m, &x, &PerturbationSpec::default(), 0).unwrap();
        assert_eq!(r.names_by_rank(), vec!["a", "b", "c"]);
    }
}
