//! Dataset CSV and metadata JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Channel, ChannelMeta, Split, Testbed, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

/// 17 significant digits; always reparses to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub testbed: Option<Testbed>,
    pub channels: Vec<ChannelMeta>,
    pub target: ChannelMeta,
    pub split: Split,
}

pub fn write_dataset(ds: &TimeSeriesDataset, csv_path: &Path, meta_path: &Path) -> Result<()> {
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["t".to_string()];
    header.extend(ds.channel_names());
    header.push(ds.target.meta.name.clone());
    w.write_record(&header)?;
    for n in 0..ds.len() {
        let mut row = Vec::with_capacity(header.len());
        row.push(fmt_f64(ds.t[n]));
        row.extend(ds.channels.iter().map(|c| fmt_f64(c.values[n])));
        row.push(fmt_f64(ds.target.values[n]));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;

    let meta = DatasetMeta {
        schema_version: SCHEMA_VERSION,
        testbed: ds.testbed,
        channels: ds.channels.iter().map(|c| c.meta.clone()).collect(),
        target: ds.target.meta.clone(),
        split: ds.split,
    };
    write_json(meta_path, &meta)
}

pub fn read_dataset(csv_path: &Path, meta_path: &Path) -> Result<TimeSeriesDataset> {
    let meta: DatasetMeta = read_json(meta_path)?;
    let data_err = |message: String| Error::Data { path: csv_path.to_path_buf(), message };

    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut expected = vec!["t".to_string()];
    expected.extend(meta.channels.iter().map(|c| c.name.clone()));
    expected.push(meta.target.name.clone());
    if header != expected {
        return Err(data_err(format!("header {header:?} does not match metadata {expected:?}")));
    }

    let width = header.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); width];
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(data_err(format!("row {} has {} fields, expected {width}", line + 1, record.len())));
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| data_err(format!("row {}: `{field}` is not a number", line + 1)))?;
            col.push(v);
        }
    }

    let mut columns = columns.into_iter();
    let t = columns.next().unwrap_or_default();
    let channels: Vec<Channel> =
        meta.channels.into_iter().zip(columns.by_ref()).map(|(meta, values)| Channel { meta, values }).collect();
    let target = Channel { meta: meta.target, values: columns.next().unwrap_or_default() };
    let ds = TimeSeriesDataset { testbed: meta.testbed, t, channels, target, split: meta.split };
    ds.validate().map_err(|e| data_err(e.to_string()))?;
    Ok(ds)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data { path: path.to_path_buf(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn float_format_round_trips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = fmt_f64(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
