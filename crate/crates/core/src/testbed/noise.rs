//! Temporally correlated Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Deterministic RNG for `(seed, stream)`; distinct streams never overlap.
pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gaussian white noise passed forward and then backward through a
/// single-pole smoother `y_t = a y_{t-1} + (1 - a) w_t`, `a = exp(-2 pi cutoff)`.
///
/// The result is rescaled to zero sample mean and unit sample standard
/// deviation, so callers choose the amplitude.
pub fn smoothed_noise(length: usize, cutoff: f64, seed: u64) -> Result<Vec<f64>> {
    smoothed_noise_stream(length, cutoff, seed, 0)
}

pub(crate) fn smoothed_noise_stream(
    length: usize,
    cutoff: f64,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::EmptyInput("smoothed noise length is zero"));
    }
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::config("cutoff", format!("{cutoff} is outside (0, 1)")));
    }
    let mut rng = seeded_rng(seed, stream);
    let mut y: Vec<f64> = (0..length).map(|_| StandardNormal.sample(&mut rng)).collect();

    let a = (-2.0 * std::f64::consts::PI * cutoff).exp();
    let mut state = y[0];
    for v in y.iter_mut() {
        state = a * state + (1.0 - a) * *v;
        *v = state;
    }
    state = y[length - 1];
    for v in y.iter_mut().rev() {
        state = a * state + (1.0 - a) * *v;
        *v = state;
    }

    if length > 1 {
        let (mean, sd) = mean_std(&y);
        if sd > 0.0 {
            y.iter_mut().for_each(|v| *v = (*v - mean) / sd);
        }
    }
    Ok(y)
}

/// Sample mean and sample (n - 1) standard deviation.
pub(crate) fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
pub(crate) fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    num / den
}
