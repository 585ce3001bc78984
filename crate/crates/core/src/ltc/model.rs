use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{LtcParameters, TAU_MIN};
use crate::error::{Error, Result};
use crate::testbed::{read_json, write_json};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    /// `None` until the model has been validated.
    pub best_val_loss: Option<f64>,
}

/// Parameters bound to the ordered input channels they consume.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverModel {
    pub params: LtcParameters,
    pub channel_names: Vec<String>,
    pub dt: f64,
    pub seed: u64,
    pub training_meta: TrainingMeta,
}

impl ObserverModel {
    pub fn new(params: LtcParameters, channel_names: Vec<String>, dt: f64, seed: u64) -> Self {
        Self { params, channel_names, dt, seed, training_meta: TrainingMeta::default() }
    }

    pub fn hidden_size(&self) -> usize {
        self.params.hidden_size
    }

    pub fn input_dim(&self) -> usize {
        self.params.input_dim
    }

    pub fn validate(&self) -> Result<()> {
        self.params.check_shapes()?;
        if self.channel_names.len() != self.params.input_dim {
            return Err(Error::Shape(format!(
                "{} channel names for input dimension {}",
                self.channel_names.len(),
                self.params.input_dim
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("dt", "must be > 0"));
        }
        if !self.params.is_finite() {
            return Err(Error::Divergence("model parameters are not finite".into()));
        }
        Ok(())
    }

    /// Short identity string: seed, channels and a hash of the parameters.
    pub fn identity(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for v in self.params.values() {
            hasher.update(v.to_bits().to_le_bytes());
        }
        for name in &self.channel_names {
            hasher.update(name.as_bytes());
            hasher.update([0]);
        }
        let digest = hasher.finalize();
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        format!("ltc-h{}-d{}-s{}-{}", self.hidden_size(), self.input_dim(), self.seed, hex)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    hidden_size: usize,
    input_dim: usize,
    dt: f64,
    tau_min: f64,
    channel_names: Vec<String>,
    seed: u64,
    training_meta: TrainingMeta,
    tau_raw: Vec<f64>,
    b: Vec<f64>,
    w_rec: Vec<f64>,
    w_in: Vec<f64>,
    readout_w: Vec<f64>,
    readout_b: f64,
}

pub(crate) fn model_to_json(model: &ObserverModel) -> serde_json::Value {
    let p = &model.params;
    serde_json::to_value(ModelFile {
        schema_version: SCHEMA_VERSION,
        hidden_size: p.hidden_size,
        input_dim: p.input_dim,
        dt: model.dt,
        tau_min: TAU_MIN,
        channel_names: model.channel_names.clone(),
        seed: model.seed,
        training_meta: model.training_meta.clone(),
        tau_raw: p.tau_raw.clone(),
        b: p.b.clone(),
        w_rec: p.w_rec.clone(),
        w_in: p.w_in.clone(),
        readout_w: p.readout_w.clone(),
        readout_b: p.readout_b,
    })
    .expect("model serializes")
}

pub fn write_model(model: &ObserverModel, path: &Path) -> Result<()> {
    write_json(path, &model_to_json(model))
}

pub fn read_model(path: &Path) -> Result<ObserverModel> {
    let f: ModelFile = read_json(path)?;
    if f.tau_min != TAU_MIN {
        return Err(Error::Data { path: path.to_path_buf(), message: format!("unsupported tau_min {}", f.tau_min) });
    }
    let model = ObserverModel {
        params: LtcParameters {
            hidden_size: f.hidden_size,
            input_dim: f.input_dim,
            tau_raw: f.tau_raw,
            b: f.b,
            w_rec: f.w_rec,
            w_in: f.w_in,
            readout_w: f.readout_w,
            readout_b: f.readout_b,
        },
        channel_names: f.channel_names,
        dt: f.dt,
        seed: f.seed,
        training_meta: f.training_meta,
    };
    model.validate().map_err(|e| Error::Data { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(model)
}
