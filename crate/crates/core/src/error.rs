use std::path::PathBuf;

use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("volume depleted at t = {t} (V = {volume})")]
    VolumeDepleted { t: f64, volume: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("channel `{0}` is degenerate (zero variance)")]
    DegenerateChannel(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("split too small: segment `{segment}` has {len} samples, needs at least {needed}")]
    SplitTooSmall { segment: &'static str, len: usize, needed: usize },

    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("missing channel `{0}`")]
    MissingChannel(String),

    #[error("empty channel selection")]
    EmptySelection,

    #[error("channel index {index} out of range for {dim} channels")]
    ChannelIndex { index: usize, dim: usize },

    #[error("loss window is empty: length {len}, skip {skip}")]
    EmptyLoss { len: usize, skip: usize },

    #[error("evaluation segment `{segment}` too short: {len} samples with warm-up {warmup}")]
    SegmentTooShort { segment: String, len: usize, warmup: usize },

    #[error("causality window out of bounds: start {start}, length {len}, segment {segment_len}")]
    Window { start: usize, len: usize, segment_len: usize },

    #[error("data error in {path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status: 2 configuration, 3 data, 4 model/data mismatch,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::MissingChannel(_) | Error::ChannelIndex { .. } => 4,
            Error::Integration { .. }
            | Error::VolumeDepleted { .. }
            | Error::EmptyInput(_)
            | Error::DegenerateChannel(_)
            | Error::Shape(_)
            | Error::SplitTooSmall { .. }
            | Error::SegmentTooShort { .. }
            | Error::Data { .. }
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Csv(_) => 3,
            Error::Divergence(_) | Error::EmptySelection | Error::EmptyLoss { .. } | Error::Window { .. } => 1,
        }
    }
}
