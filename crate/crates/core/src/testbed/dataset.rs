//! Standardized, chronologically split datasets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::noise::{mean_std, smoothed_noise_stream};
use super::systems::RawTrajectories;
use crate::error::{Error, Result};

/// Offset separating the dataset noise streams from simulator streams.
const NOISE_STREAM_BASE: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Testbed {
    Mechanical,
    Cstr,
    PredPrey,
}

impl Testbed {
    pub const ALL: [Testbed; 3] = [Testbed::Mechanical, Testbed::Cstr, Testbed::PredPrey];

    pub fn name(self) -> &'static str {
        match self {
            Testbed::Mechanical => "mechanical",
            Testbed::Cstr => "cstr",
            Testbed::PredPrey => "predprey",
        }
    }

    /// Names of the two physical inputs, the interaction term and the target.
    pub fn signal_names(self) -> [&'static str; 4] {
        match self {
            Testbed::Mechanical => ["F", "x", "F_x_interaction", "xdot"],
            Testbed::Cstr => ["F_in", "V", "F_in_V_interaction", "C_A"],
            Testbed::PredPrey => ["Prey", "alpha", "alpha_Prey_interaction", "Predator"],
        }
    }

    /// The channel set the pruning study is expected to keep.
    pub fn physical_channels(self) -> [&'static str; 2] {
        let [a, b, _, _] = self.signal_names();
        [a, b]
    }

    pub fn interaction_channel(self) -> &'static str {
        self.signal_names()[2]
    }
}

impl fmt::Display for Testbed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Testbed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mechanical" => Ok(Testbed::Mechanical),
            "cstr" => Ok(Testbed::Cstr),
            "predprey" => Ok(Testbed::PredPrey),
            other => Err(Error::config("testbed", format!("unknown testbed `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Physical,
    Noise,
    Interaction,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub name: String,
    pub mu: f64,
    pub sigma: f64,
    pub kind: ChannelKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub meta: ChannelMeta,
    pub values: Vec<f64>,
}

/// `train = [0, train_end)`, `val = [train_end, val_end)`, `test = [val_end, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_end: usize,
    pub val_end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Train,
    Val,
    Test,
}

impl Segment {
    pub fn name(self) -> &'static str {
        match self {
            Segment::Train => "train",
            Segment::Val => "val",
            Segment::Test => "test",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Segment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Segment::Train),
            "val" => Ok(Segment::Val),
            "test" => Ok(Segment::Test),
            other => Err(Error::config("segment", format!("unknown segment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub testbed: Option<Testbed>,
    pub t: Vec<f64>,
    pub channels: Vec<Channel>,
    pub target: Channel,
    pub split: Split,
}

/// Row-major `N x d` input block whose columns are bound to channel names.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub names: Vec<String>,
    pub rows: usize,
    pub data: Vec<f64>,
}

impl ChannelMatrix {
    pub fn new(names: Vec<String>, rows: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * names.len() {
            return Err(Error::Shape(format!(
                "{} values for {} rows x {} columns",
                data.len(),
                rows,
                names.len()
            )));
        }
        Ok(Self { names, rows, data })
    }

    pub fn from_columns(names: Vec<String>, columns: &[&[f64]]) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Shape("column count differs from name count".into()));
        }
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Shape("columns have different lengths".into()));
        }
        let d = columns.len();
        let mut data = vec![0.0; rows * d];
        for (k, col) in columns.iter().enumerate() {
            for (n, v) in col.iter().enumerate() {
                data[n * d + k] = *v;
            }
        }
        Ok(Self { names, rows, data })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let d = self.dim();
        &self.data[n * d..(n + 1) * d]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.rows).map(|n| self.data[n * self.dim() + k]).collect()
    }

    /// Rows `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> ChannelMatrix {
        let d = self.dim();
        ChannelMatrix { names: self.names.clone(), rows: end - start, data: self.data[start * d..end * d].to_vec() }
    }
}

/// Standardizes with the sample (n - 1) standard deviation.
pub fn standardize(signal: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if signal.len() < 2 {
        return Err(Error::EmptyInput("standardization needs at least two samples"));
    }
    let (mu, sigma) = mean_std(signal);
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::DegenerateChannel(String::new()));
    }
    Ok((signal.iter().map(|v| (v - mu) / sigma).collect(), mu, sigma))
}

fn standardized_channel(name: &str, kind: ChannelKind, raw: &[f64]) -> Result<Channel> {
    let (values, mu, sigma) = standardize(raw).map_err(|e| match e {
        Error::DegenerateChannel(_) => Error::DegenerateChannel(name.to_string()),
        other => other,
    })?;
    Ok(Channel { meta: ChannelMeta { name: name.to_string(), mu, sigma, kind }, values })
}

/// A standardized dataset from arbitrary named signals on the grid `t`.
/// Inputs are tagged physical; the split uses the default proportions.
pub fn custom_dataset(t: Vec<f64>, inputs: &[(&str, &[f64])], target: (&str, &[f64])) -> Result<TimeSeriesDataset> {
    if inputs.iter().any(|(_, v)| v.len() != t.len()) || target.1.len() != t.len() {
        return Err(Error::Shape("signals do not share the time grid".into()));
    }
    let channels = inputs
        .iter()
        .map(|(name, values)| standardized_channel(name, ChannelKind::Physical, values))
        .collect::<Result<Vec<_>>>()?;
    let target = standardized_channel(target.0, ChannelKind::Target, target.1)?;
    let ds = TimeSeriesDataset { testbed: None, t, channels, target, split: Split { train_end: 0, val_end: 0 } };
    let ds = chrono_split(ds, 0.8, 0.2, 0)?;
    ds.validate()?;
    Ok(ds)
}

/// Builds the standardized dataset: two physical inputs, their raw product,
/// `n_noise` smoothed-noise channels and the target. The split is left at the
/// default 64/16/20 proportions; use [`chrono_split`] to change it.
pub fn assemble_dataset(
    raw: &RawTrajectories,
    n_noise: usize,
    noise_cutoff: f64,
    seed: u64,
) -> Result<TimeSeriesDataset> {
    let (testbed, t, a, b, target) = match raw {
        RawTrajectories::Mechanical(r) => (Testbed::Mechanical, &r.t, &r.force, &r.x, &r.xdot),
        RawTrajectories::Cstr(r) => (Testbed::Cstr, &r.t, &r.f_in, &r.volume, &r.c_a),
        RawTrajectories::PredPrey(r) => (Testbed::PredPrey, &r.t, &r.prey, &r.alpha, &r.predator),
    };
    let n = t.len();
    if [a.len(), b.len(), target.len()].iter().any(|&l| l != n) {
        return Err(Error::Shape("raw trajectories do not share a grid".into()));
    }
    let [name_a, name_b, name_ab, name_target] = testbed.signal_names();
    let product: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x * y).collect();

    let mut channels = vec![
        standardized_channel(name_a, ChannelKind::Physical, a)?,
        standardized_channel(name_b, ChannelKind::Physical, b)?,
        standardized_channel(name_ab, ChannelKind::Interaction, &product)?,
    ];
    for k in 0..n_noise {
        let noise = smoothed_noise_stream(n, noise_cutoff, seed, NOISE_STREAM_BASE + k as u64)?;
        channels.push(standardized_channel(&format!("noise{}", k + 1), ChannelKind::Noise, &noise)?);
    }
    let target = standardized_channel(name_target, ChannelKind::Target, target)?;

    let ds = TimeSeriesDataset { testbed: Some(testbed), t: t.clone(), channels, target, split: Split { train_end: 0, val_end: 0 } };
    chrono_split(ds, 0.8, 0.2, 0)
}

/// Sets contiguous train / validation / test segments. Validation is the last
/// `val_frac_of_train` of the first `train_frac` of the samples.
pub fn chrono_split(
    mut dataset: TimeSeriesDataset,
    train_frac: f64,
    val_frac_of_train: f64,
    warmup: usize,
) -> Result<TimeSeriesDataset> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::config("train_frac", format!("{train_frac} is outside (0, 1)")));
    }
    if !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0) {
        return Err(Error::config("val_frac_of_train", format!("{val_frac_of_train} is outside (0, 1)")));
    }
    let n = dataset.len();
    let trainval = (n as f64 * train_frac).floor() as usize;
    let val = (trainval as f64 * val_frac_of_train).floor() as usize;
    let split = Split { train_end: trainval - val, val_end: trainval };

    let needed = warmup + 1;
    for (segment, len) in [
        ("train", split.train_end),
        ("val", split.val_end - split.train_end),
        ("test", n - split.val_end),
    ] {
        if len < needed.max(1) {
            return Err(Error::SplitTooSmall { segment, len, needed: needed.max(1) });
        }
    }
    dataset.split = split;
    Ok(dataset)
}

impl TimeSeriesDataset {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.meta.name.clone()).collect()
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.meta.name == name)
    }

    pub fn segment_range(&self, segment: Segment) -> std::ops::Range<usize> {
        match segment {
            Segment::Train => 0..self.split.train_end,
            Segment::Val => self.split.train_end..self.split.val_end,
            Segment::Test => self.split.val_end..self.len(),
        }
    }

    /// Input columns for `names` (in that order) over the whole series.
    pub fn inputs(&self, names: &[String]) -> Result<ChannelMatrix> {
        let cols: Vec<&[f64]> = names
            .iter()
            .map(|name| {
                self.channel(name).map(|c| c.values.as_slice()).ok_or_else(|| Error::MissingChannel(name.clone()))
            })
            .collect::<Result<_>>()?;
        ChannelMatrix::from_columns(names.to_vec(), &cols)
    }

    pub fn segment_inputs(&self, names: &[String], segment: Segment) -> Result<ChannelMatrix> {
        let r = self.segment_range(segment);
        Ok(self.inputs(names)?.slice_rows(r.start, r.end))
    }

    pub fn segment_target(&self, segment: Segment) -> &[f64] {
        &self.target.values[self.segment_range(segment)]
    }

    /// Checks lengths, standardization, name uniqueness and split ordering.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let mut seen = std::collections::HashSet::new();
        for ch in self.channels.iter().chain(std::iter::once(&self.target)) {
            if ch.values.len() != n {
                return Err(Error::Shape(format!("channel `{}` has {} samples, grid {}", ch.meta.name, ch.values.len(), n)));
            }
            if !seen.insert(ch.meta.name.as_str()) {
                return Err(Error::Shape(format!("duplicate channel name `{}`", ch.meta.name)));
            }
            if !(ch.meta.sigma > 0.0) {
                return Err(Error::DegenerateChannel(ch.meta.name.clone()));
            }
        }
        for ch in &self.channels {
            let (mean, sd) = mean_std(&ch.values);
            if mean.abs() >= 1e-9 || (sd - 1.0).abs() >= 1e-6 {
                return Err(Error::Shape(format!("channel `{}` is not standardized", ch.meta.name)));
            }
        }
        let Split { train_end, val_end } = self.split;
        if !(0 < train_end && train_end < val_end && val_end < n) {
            return Err(Error::Shape(format!("invalid split {train_end}/{val_end} for {n} samples")));
        }
        Ok(())
    }
}
