//! Adam with bias correction, plus global-norm gradient clipping.

use crate::ltc::LtcParameters;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Moment accumulators shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: LtcParameters,
    pub v: LtcParameters,
    pub step: u64,
}

impl AdamState {
    pub fn new(like: &LtcParameters) -> Self {
        let zeros = LtcParameters::zeros(like.hidden_size, like.input_dim);
        Self { m: zeros.clone(), v: zeros, step: 0 }
    }
}

/// Rescales `grads` so the global L2 norm does not exceed `max_norm`.
/// Returns the norm before clipping.
pub fn clip_gradients(grads: &mut LtcParameters, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

/// One bias-corrected Adam step. Time constants stay positive because the
/// optimizer only ever touches their unconstrained parameterization.
pub fn adam_update(params: &mut LtcParameters, grads: &LtcParameters, state: &mut AdamState, lr: f64) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    let moments = state.m.values_mut().zip(state.v.values_mut());
    for ((p, g), (m, v)) in params.values_mut().zip(grads.values()).zip(moments) {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}
