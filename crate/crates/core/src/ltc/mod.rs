//! Liquid time-constant observer: neuron dynamics, semi-implicit Euler
//! stepping, affine readout and forward simulation.
//!
//! Each neuron obeys
//!
//! ```text
//! tau_i dh_i/dt = -(h_i - b_i) + sum_j w_rec[i,j] tanh(h_j) + sum_k w_in[i,k] tanh(u_k)
//! ```
//!
//! and is advanced with the leak treated implicitly and the drive explicitly:
//! `h_i' = (h_i + r_i drive_i) / (1 + r_i)` with `r_i = dt / tau_i`.

mod model;
mod params;

pub use model::{read_model, write_model, ObserverModel, TrainingMeta};
pub use params::{LtcParameters, TAU_MIN};
pub(crate) use params::sigmoid;

use crate::error::{Error, Result};
use crate::testbed::ChannelMatrix;

/// Hidden activation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LtcState {
    pub h: Vec<f64>,
}

impl LtcState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self { h: vec![0.0; hidden_size] }
    }
}

/// Per-call constants of the update: `r_i = dt / tau_i` and the order in
/// which input contributions are summed.
pub(crate) struct Stepper<'a> {
    pub params: &'a LtcParameters,
    pub r: Vec<f64>,
    pub input_order: Vec<usize>,
}

impl<'a> Stepper<'a> {
    pub fn new(params: &'a LtcParameters, dt: f64, input_order: Vec<usize>) -> Self {
        let r = params.taus().iter().map(|tau| dt / tau).collect();
        Self { params, r, input_order }
    }

    pub fn natural(params: &'a LtcParameters, dt: f64) -> Self {
        Self::new(params, dt, (0..params.input_dim).collect())
    }

    /// Drive at the current state; `act` receives `tanh(h)` and `s` holds
    /// `tanh(u)`.
    pub fn drive(&self, h: &[f64], s: &[f64], act: &mut [f64], drive: &mut [f64]) {
        let p = self.params;
        let (hs, d) = (p.hidden_size, p.input_dim);
        for (a, hj) in act.iter_mut().zip(h) {
            *a = hj.tanh();
        }
        for i in 0..hs {
            let mut acc = p.b[i];
            let rec = &p.w_rec[i * hs..(i + 1) * hs];
            for (w, a) in rec.iter().zip(act.iter()) {
                acc += w * a;
            }
            let inp = &p.w_in[i * d..(i + 1) * d];
            for &k in &self.input_order {
                acc += inp[k] * s[k];
            }
            drive[i] = acc;
        }
    }

    /// Applies the semi-implicit update in place.
    pub fn advance(&self, h: &mut [f64], drive: &[f64]) -> Result<()> {
        for i in 0..h.len() {
            let next = (h[i] + self.r[i] * drive[i]) / (1.0 + self.r[i]);
            if !next.is_finite() {
                return Err(Error::Divergence(format!("neuron {i} became non-finite")));
            }
            h[i] = next;
        }
        Ok(())
    }
}

/// One semi-implicit Euler step of the neuron ODE.
pub fn ltc_step(state: &LtcState, u: &[f64], params: &LtcParameters, dt: f64) -> Result<LtcState> {
    params.check_shapes()?;
    if u.len() != params.input_dim {
        return Err(Error::Shape(format!("input has {} entries, model expects {}", u.len(), params.input_dim)));
    }
    if state.h.len() != params.hidden_size {
        return Err(Error::Shape("state length differs from hidden size".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::config("dt", "must be > 0"));
    }
    let stepper = Stepper::natural(params, dt);
    let s: Vec<f64> = u.iter().map(|v| v.tanh()).collect();
    let mut act = vec![0.0; params.hidden_size];
    let mut drive = vec![0.0; params.hidden_size];
    stepper.drive(&state.h, &s, &mut act, &mut drive);
    let mut h = state.h.clone();
    stepper.advance(&mut h, &drive)?;
    Ok(LtcState { h })
}

/// `readout_w . h + readout_b`.
pub fn readout(state: &LtcState, params: &LtcParameters) -> Result<f64> {
    if state.h.len() != params.readout_w.len() {
        return Err(Error::Shape("state length differs from readout width".into()));
    }
    Ok(readout_raw(&state.h, params))
}

pub(crate) fn readout_raw(h: &[f64], params: &LtcParameters) -> f64 {
    params.readout_w.iter().zip(h).fold(params.readout_b, |acc, (w, x)| acc + w * x)
}

/// Output of [`forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// Row-major `N x H` hidden trajectory (state after consuming each input row).
    pub hidden: Vec<f64>,
    pub estimates: Vec<f64>,
}

/// Column indices of `inputs` that feed the model, in model channel order.
/// Names are authoritative; columns may arrive in any order.
pub fn bind_columns(model_channels: &[String], inputs: &ChannelMatrix) -> Result<Vec<usize>> {
    model_channels
        .iter()
        .map(|name| {
            inputs.names.iter().position(|n| n == name).ok_or_else(|| Error::MissingChannel(name.clone()))
        })
        .collect()
}

/// Input summation order: channel positions sorted by name. Permuting a
/// model's channels together with its input-weight columns therefore leaves
/// every floating-point sum unchanged.
pub(crate) fn canonical_order(names: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    order
}

/// Runs the model over every row of `inputs`: step, then read out.
pub fn forward(model: &ObserverModel, inputs: &ChannelMatrix, h0: Option<&LtcState>) -> Result<ForwardPass> {
    let params = &model.params;
    params.check_shapes()?;
    let cols = bind_columns(&model.channel_names, inputs)?;
    let identity = cols.iter().enumerate().all(|(k, &c)| k == c) && cols.len() == inputs.dim();
    let hs = params.hidden_size;
    let d = params.input_dim;

    let stepper = Stepper::new(params, model.dt, canonical_order(&model.channel_names));
    let mut h = match h0 {
        Some(state) if state.h.len() != hs => return Err(Error::Shape("initial state has wrong length".into())),
        Some(state) => state.h.clone(),
        None => vec![0.0; hs],
    };
    let mut s = vec![0.0; d];
    let mut act = vec![0.0; hs];
    let mut drive = vec![0.0; hs];
    let mut hidden = Vec::with_capacity(inputs.rows * hs);
    let mut estimates = Vec::with_capacity(inputs.rows);

    for n in 0..inputs.rows {
        let row = inputs.row(n);
        if identity {
            for (sk, u) in s.iter_mut().zip(row) {
                *sk = u.tanh();
            }
        } else {
            for (sk, &c) in s.iter_mut().zip(&cols) {
                *sk = row[c].tanh();
            }
        }
        stepper.drive(&h, &s, &mut act, &mut drive);
        stepper.advance(&mut h, &drive)?;
        hidden.extend_from_slice(&h);
        estimates.push(readout_raw(&h, params));
    }
    Ok(ForwardPass { hidden, estimates })
}

/// Positions (in `channels` order) of the names in `keep`.
pub fn restrict_channels<S: AsRef<str>>(channels: &[String], keep: &[S]) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    for name in keep {
        if !channels.iter().any(|c| c == name.as_ref()) {
            return Err(Error::MissingChannel(name.as_ref().to_string()));
        }
    }
    Ok(channels
        .iter()
        .enumerate()
        .filter(|(_, c)| keep.iter().any(|k| k.as_ref() == c.as_str()))
        .map(|(i, _)| i)
        .collect())
}
