//! Reverse-mode gradients of the windowed MSE through the unrolled
//! semi-implicit updates. Exact for the discrete recursion.

use crate::error::{Error, Result};
use crate::ltc::{bind_columns, canonical_order, readout_raw, sigmoid, LtcParameters, LtcState, ObserverModel, Stepper};
use crate::testbed::ChannelMatrix;

/// Loss and `dL/dtheta` for every parameter of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub grads: LtcParameters,
}

/// Gradient of the MSE over indices `>= skip`, starting from a zero state.
pub fn backward(model: &ObserverModel, inputs: &ChannelMatrix, target: &[f64], skip: usize) -> Result<Gradients> {
    backward_weighted(model, inputs, target, skip, 1.0)
}

/// As [`backward`] for the loss `weight * MSE`.
pub fn backward_weighted(
    model: &ObserverModel,
    inputs: &ChannelMatrix,
    target: &[f64],
    skip: usize,
    weight: f64,
) -> Result<Gradients> {
    backward_from(model, inputs, target, skip, weight, None)
}

/// As [`backward_weighted`] starting from `h0`. The initial state is treated
/// as a constant, so no gradient flows past the window start.
pub fn backward_from(
    model: &ObserverModel,
    inputs: &ChannelMatrix,
    target: &[f64],
    skip: usize,
    weight: f64,
    h0: Option<&LtcState>,
) -> Result<Gradients> {
    let p = &model.params;
    p.check_shapes()?;
    let n = inputs.rows;
    if target.len() != n {
        return Err(Error::Shape(format!("{} targets for {} input rows", target.len(), n)));
    }
    if n <= skip {
        return Err(Error::EmptyLoss { len: n, skip });
    }
    let cols = bind_columns(&model.channel_names, inputs)?;
    let (hs, d) = (p.hidden_size, p.input_dim);
    let stepper = Stepper::new(p, model.dt, canonical_order(&model.channel_names));
    let taus = p.taus();

    // Forward sweep, keeping what the reverse sweep needs.
    let mut hidden = vec![0.0; (n + 1) * hs]; // row 0 is the initial state
    if let Some(state) = h0 {
        if state.h.len() != hs {
            return Err(Error::Shape("initial state has wrong length".into()));
        }
        hidden[..hs].copy_from_slice(&state.h);
    }
    let mut drives = vec![0.0; n * hs];
    let mut squashed = vec![0.0; n * d];
    let mut preds = vec![0.0; n];
    let mut act = vec![0.0; hs];
    for t in 0..n {
        let row = inputs.row(t);
        let s = &mut squashed[t * d..(t + 1) * d];
        for (sk, &c) in s.iter_mut().zip(&cols) {
            *sk = row[c].tanh();
        }
        let (done, rest) = hidden.split_at_mut((t + 1) * hs);
        let h_prev = &done[t * hs..];
        let drive = &mut drives[t * hs..(t + 1) * hs];
        stepper.drive(h_prev, s, &mut act, drive);
        let h = &mut rest[..hs];
        h.copy_from_slice(h_prev);
        stepper.advance(h, drive)?;
        preds[t] = readout_raw(h, p);
    }

    let count = (n - skip) as f64;
    let loss = weight * preds[skip..].iter().zip(&target[skip..]).map(|(y, r)| (y - r).powi(2)).sum::<f64>() / count;

    let mut g = LtcParameters::zeros(hs, d);
    let mut gh = vec![0.0; hs];
    let mut gh_prev = vec![0.0; hs];
    let mut g_drive = vec![0.0; hs];
    let dtau_draw: Vec<f64> = p.tau_raw.iter().map(|&raw| sigmoid(raw)).collect();

    for t in (0..n).rev() {
        let h = &hidden[(t + 1) * hs..(t + 2) * hs];
        let h_prev = &hidden[t * hs..(t + 1) * hs];
        let drive = &drives[t * hs..(t + 1) * hs];
        let s = &squashed[t * d..(t + 1) * d];

        if t >= skip {
            let gy = weight * 2.0 * (preds[t] - target[t]) / count;
            g.readout_b += gy;
            for i in 0..hs {
                g.readout_w[i] += gy * h[i];
                gh[i] += gy * p.readout_w[i];
            }
        }

        for i in 0..hs {
            let r = stepper.r[i];
            let denom = 1.0 + r;
            g_drive[i] = gh[i] * r / denom;
            // dh/dr = (drive - h_prev) / (1 + r)^2, dr/dtau = -dt / tau^2
            let g_r = gh[i] * (drive[i] - h_prev[i]) / (denom * denom);
            g.tau_raw[i] += g_r * (-model.dt / (taus[i] * taus[i])) * dtau_draw[i];
            g.b[i] += g_drive[i];
            let gd = g_drive[i];
            let w_in_row = &mut g.w_in[i * d..(i + 1) * d];
            for (gw, sk) in w_in_row.iter_mut().zip(s) {
                *gw += gd * sk;
            }
            let w_rec_row = &mut g.w_rec[i * hs..(i + 1) * hs];
            for (gw, hj) in w_rec_row.iter_mut().zip(h_prev) {
                *gw += gd * hj.tanh();
            }
        }

        // Recurrent path: drive_i depends on tanh(h_prev_j) through w_rec[i, j].
        gh_prev.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..hs {
            let gd = g_drive[i];
            if gd != 0.0 {
                let w_rec_row = &p.w_rec[i * hs..(i + 1) * hs];
                for (acc, w) in gh_prev.iter_mut().zip(w_rec_row) {
                    *acc += gd * w;
                }
            }
        }
        for j in 0..hs {
            let a = h_prev[j].tanh();
            gh_prev[j] = gh[j] / (1.0 + stepper.r[j]) + (1.0 - a * a) * gh_prev[j];
        }
        std::mem::swap(&mut gh, &mut gh_prev);
    }

    if !loss.is_finite() || !g.is_finite() {
        return Err(Error::Divergence("non-finite loss or gradient".into()));
    }
    Ok(Gradients { loss, grads: g })
}
