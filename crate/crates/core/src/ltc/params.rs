use rand::Rng;
use rand_distr::Uniform;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::testbed::seeded_rng;

/// Lower bound added to every effective time constant.
pub const TAU_MIN: f64 = 0.05;

/// Learnable values of an LTC observer with `H` neurons and `d` inputs.
///
/// Matrices are row-major: `w_rec[i * H + j]` couples neuron `j` into neuron
/// `i`, `w_in[i * d + k]` couples input `k` into neuron `i`. The same type
/// doubles as the container for gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtcParameters {
    pub hidden_size: usize,
    pub input_dim: usize,
    /// Effective time constant is `softplus(tau_raw) + TAU_MIN`.
    pub tau_raw: Vec<f64>,
    pub b: Vec<f64>,
    pub w_rec: Vec<f64>,
    pub w_in: Vec<f64>,
    pub readout_w: Vec<f64>,
    pub readout_b: f64,
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of `softplus(raw) + TAU_MIN`.
pub(crate) fn tau_to_raw(tau: f64) -> f64 {
    let s = tau - TAU_MIN;
    if s > 30.0 {
        s + (-(-s).exp()).ln_1p()
    } else {
        s.exp_m1().ln()
    }
}

impl LtcParameters {
    /// All-zero parameters (also the zero gradient) with every `tau_raw` at 0.
    pub fn zeros(hidden_size: usize, input_dim: usize) -> Self {
        Self {
            hidden_size,
            input_dim,
            tau_raw: vec![0.0; hidden_size],
            b: vec![0.0; hidden_size],
            w_rec: vec![0.0; hidden_size * hidden_size],
            w_in: vec![0.0; hidden_size * input_dim],
            readout_w: vec![0.0; hidden_size],
            readout_b: 0.0,
        }
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights, zero biases and
    /// time constants of 1.
    pub fn init(hidden_size: usize, input_dim: usize, seed: u64) -> Result<Self> {
        if hidden_size == 0 || input_dim == 0 {
            return Err(Error::Shape(format!("hidden_size {hidden_size} and input_dim {input_dim} must be >= 1")));
        }
        let mut rng = seeded_rng(seed, 0x17c);
        let mut fill = |len: usize, fan_in: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            (0..len).map(|_| rng.sample(dist)).collect()
        };
        let w_rec = fill(hidden_size * hidden_size, hidden_size);
        let w_in = fill(hidden_size * input_dim, input_dim);
        let readout_w = fill(hidden_size, hidden_size);
        Ok(Self {
            hidden_size,
            input_dim,
            tau_raw: vec![tau_to_raw(1.0); hidden_size],
            b: vec![0.0; hidden_size],
            w_rec,
            w_in,
            readout_w,
            readout_b: 0.0,
        })
    }

    pub fn tau(&self, i: usize) -> f64 {
        softplus(self.tau_raw[i]) + TAU_MIN
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.hidden_size).map(|i| self.tau(i)).collect()
    }

    pub fn set_tau(&mut self, i: usize, tau: f64) {
        assert!(tau > TAU_MIN, "time constant must exceed {TAU_MIN}");
        self.tau_raw[i] = tau_to_raw(tau);
    }

    pub fn w_rec_at(&self, i: usize, j: usize) -> f64 {
        self.w_rec[i * self.hidden_size + j]
    }

    pub fn w_in_at(&self, i: usize, k: usize) -> f64 {
        self.w_in[i * self.input_dim + k]
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (h, d) = (self.hidden_size, self.input_dim);
        let ok = self.tau_raw.len() == h
            && self.b.len() == h
            && self.w_rec.len() == h * h
            && self.w_in.len() == h * d
            && self.readout_w.len() == h;
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("parameter arrays do not match H = {h}, d = {d}")))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    /// Every scalar in a fixed order: tau_raw, b, w_rec, w_in, readout_w, readout_b.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.tau_raw
            .iter()
            .chain(&self.b)
            .chain(&self.w_rec)
            .chain(&self.w_in)
            .chain(&self.readout_w)
            .chain(std::iter::once(&self.readout_b))
            .copied()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.tau_raw
            .iter_mut()
            .chain(self.b.iter_mut())
            .chain(self.w_rec.iter_mut())
            .chain(self.w_in.iter_mut())
            .chain(self.readout_w.iter_mut())
            .chain(std::iter::once(&mut self.readout_b))
    }

    pub fn len(&self) -> usize {
        let (h, d) = (self.hidden_size, self.input_dim);
        3 * h + h * h + h * d + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Global L2 norm over all entries.
    pub fn norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    /// Keeps only the input-weight columns `cols` (in that order).
    pub fn select_inputs(&self, cols: &[usize]) -> Self {
        let h = self.hidden_size;
        let mut w_in = Vec::with_capacity(h * cols.len());
        for i in 0..h {
            for &k in cols {
                w_in.push(self.w_in_at(i, k));
            }
        }
        Self { input_dim: cols.len(), w_in, ..self.clone() }
    }
}
