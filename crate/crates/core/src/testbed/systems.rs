//! The three mechanistic testbeds.
//!
//! Each simulator integrates its ODE with RK4 on a uniform grid. Exogenous
//! signals (force, inflow, growth rate) are defined on the sample grid and
//! held constant across the four stages of a step.

use serde::{Deserialize, Serialize};

use super::noise::smoothed_noise_stream;
use super::rk4::integrate;
use crate::error::{Error, Result};

const FORCE_STREAM: u64 = 1;
const INFLOW_STREAM: u64 = 2;
const ALPHA_STREAM: u64 = 3;

/// Forced spring-mass-damper `m x'' + c x' + k x = F(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanicalConfig {
    pub m: f64,
    pub c: f64,
    pub k: f64,
    pub x0: f64,
    pub v0: f64,
    /// Forcing amplitude (standard deviation of `F`); zero disables forcing.
    pub force_amp: f64,
    /// Smoothing cutoff of the forcing noise; see [`smoothed_noise`](super::smoothed_noise).
    pub force_cutoff: f64,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for MechanicalConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            c: 0.3,
            k: 2.0,
            x0: 0.0,
            v0: 0.0,
            force_amp: 1.0,
            force_cutoff: 0.02,
            duration: 200.0,
            dt: 0.05,
            seed: 0,
        }
    }
}

impl MechanicalConfig {
    pub fn validate(&self) -> Result<()> {
        positive("mechanical.m", self.m)?;
        nonnegative("mechanical.c", self.c)?;
        positive("mechanical.k", self.k)?;
        nonnegative("mechanical.force_amp", self.force_amp)?;
        cutoff("mechanical.force_cutoff", self.force_cutoff)?;
        grid("mechanical", self.duration, self.dt)?;
        finite("mechanical.x0", self.x0)?;
        finite("mechanical.v0", self.v0)
    }
}

/// Continuous stirred-tank reactor with a modulated inflow and first-order
/// consumption of species A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CstrConfig {
    pub f_out: f64,
    pub c_a_in: f64,
    pub k_rate: f64,
    pub v0: f64,
    pub c_a0: f64,
    pub inflow_mean: f64,
    /// Inflow modulation amplitude; zero gives `F_in = inflow_mean`.
    pub inflow_amp: f64,
    pub inflow_cutoff: f64,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for CstrConfig {
    fn default() -> Self {
        Self {
            f_out: 1.0,
            c_a_in: 1.0,
            k_rate: 0.1,
            v0: 10.0,
            c_a0: 0.5,
            inflow_mean: 1.0,
            inflow_amp: 0.3,
            inflow_cutoff: 0.02,
            duration: 200.0,
            dt: 0.05,
            seed: 0,
        }
    }
}

impl CstrConfig {
    pub fn validate(&self) -> Result<()> {
        positive("cstr.v0", self.v0)?;
        nonnegative("cstr.f_out", self.f_out)?;
        nonnegative("cstr.k_rate", self.k_rate)?;
        positive("cstr.inflow_mean", self.inflow_mean)?;
        nonnegative("cstr.inflow_amp", self.inflow_amp)?;
        nonnegative("cstr.c_a_in", self.c_a_in)?;
        nonnegative("cstr.c_a0", self.c_a0)?;
        cutoff("cstr.inflow_cutoff", self.inflow_cutoff)?;
        grid("cstr", self.duration, self.dt)
    }
}

/// Lotka-Volterra predator-prey model with a seasonal, noisy prey growth rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredPreyConfig {
    pub alpha_base: f64,
    pub alpha_amp: f64,
    pub alpha_period: f64,
    /// Amplitude of the environmental noise in the growth rate.
    pub alpha_noise_amp: f64,
    pub alpha_noise_cutoff: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub prey0: f64,
    pub pred0: f64,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for PredPreyConfig {
    fn default() -> Self {
        Self {
            alpha_base: 1.0,
            alpha_amp: 0.3,
            alpha_period: 25.0,
            alpha_noise_amp: 0.1,
            alpha_noise_cutoff: 0.02,
            beta: 0.4,
            delta: 0.1,
            gamma: 0.4,
            prey0: 10.0,
            pred0: 5.0,
            duration: 200.0,
            dt: 0.05,
            seed: 0,
        }
    }
}

impl PredPreyConfig {
    pub fn validate(&self) -> Result<()> {
        positive("predprey.beta", self.beta)?;
        positive("predprey.delta", self.delta)?;
        positive("predprey.gamma", self.gamma)?;
        positive("predprey.prey0", self.prey0)?;
        positive("predprey.pred0", self.pred0)?;
        nonnegative("predprey.alpha_amp", self.alpha_amp)?;
        nonnegative("predprey.alpha_noise_amp", self.alpha_noise_amp)?;
        if !(self.alpha_base > self.alpha_amp) {
            return Err(Error::config("predprey.alpha_base", "must exceed alpha_amp"));
        }
        positive("predprey.alpha_period", self.alpha_period)?;
        cutoff("predprey.alpha_noise_cutoff", self.alpha_noise_cutoff)?;
        grid("predprey", self.duration, self.dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalTrajectories {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub force: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CstrTrajectories {
    pub t: Vec<f64>,
    pub volume: Vec<f64>,
    pub c_a: Vec<f64>,
    pub f_in: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredPreyTrajectories {
    pub t: Vec<f64>,
    pub prey: Vec<f64>,
    pub predator: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Raw, unstandardized simulator output for one testbed.
#[derive(Debug, Clone, PartialEq)]
pub enum RawTrajectories {
    Mechanical(MechanicalTrajectories),
    Cstr(CstrTrajectories),
    PredPrey(PredPreyTrajectories),
}

pub fn simulate_mechanical(cfg: &MechanicalConfig) -> Result<MechanicalTrajectories> {
    cfg.validate()?;
    let steps = step_count(cfg.duration, cfg.dt);
    let force = exogenous(steps + 1, cfg.force_amp, cfg.force_cutoff, cfg.seed, FORCE_STREAM)?;

    let MechanicalConfig { m, c, k, .. } = *cfg;
    let states = integrate(
        |n, _t, y| vec![y[1], (force[n] - c * y[1] - k * y[0]) / m],
        &[cfg.x0, cfg.v0],
        cfg.dt,
        steps,
        |_, t, y| finite_state(t, y),
    )?;

    Ok(MechanicalTrajectories {
        t: time_grid(steps, cfg.dt),
        x: states.iter().map(|s| s[0]).collect(),
        xdot: states.iter().map(|s| s[1]).collect(),
        force,
    })
}

pub fn simulate_cstr(cfg: &CstrConfig) -> Result<CstrTrajectories> {
    cfg.validate()?;
    let steps = step_count(cfg.duration, cfg.dt);
    let f_in: Vec<f64> = exogenous(steps + 1, cfg.inflow_amp, cfg.inflow_cutoff, cfg.seed, INFLOW_STREAM)?
        .into_iter()
        .map(|v| (cfg.inflow_mean + v).max(0.0))
        .collect();

    let CstrConfig { f_out, c_a_in, k_rate, .. } = *cfg;
    // d(C V)/dt = F_in C_in - F_out C - k C V with dV/dt = F_in - F_out gives
    // dC/dt = F_in (C_in - C) / V - k C.
    let states = integrate(
        |n, _t, y| {
            let (v, c) = (y[0], y[1]);
            vec![f_in[n] - f_out, f_in[n] * (c_a_in - c) / v - k_rate * c]
        },
        &[cfg.v0, cfg.c_a0],
        cfg.dt,
        steps,
        |_, t, y| {
            finite_state(t, y)?;
            if y[0] <= 0.0 {
                return Err(Error::VolumeDepleted { t, volume: y[0] });
            }
            Ok(())
        },
    )?;

    Ok(CstrTrajectories {
        t: time_grid(steps, cfg.dt),
        volume: states.iter().map(|s| s[0]).collect(),
        c_a: states.iter().map(|s| s[1]).collect(),
        f_in,
    })
}

pub fn simulate_predprey(cfg: &PredPreyConfig) -> Result<PredPreyTrajectories> {
    cfg.validate()?;
    let steps = step_count(cfg.duration, cfg.dt);
    let noise = exogenous(steps + 1, cfg.alpha_noise_amp, cfg.alpha_noise_cutoff, cfg.seed, ALPHA_STREAM)?;
    let t = time_grid(steps, cfg.dt);
    let alpha: Vec<f64> = t
        .iter()
        .zip(&noise)
        .map(|(&tn, &w)| {
            cfg.alpha_base + cfg.alpha_amp * (2.0 * std::f64::consts::PI * tn / cfg.alpha_period).sin() + w
        })
        .collect();

    let PredPreyConfig { beta, delta, gamma, .. } = *cfg;
    let states = integrate(
        |n, _t, y| {
            let (prey, pred) = (y[0], y[1]);
            vec![alpha[n] * prey - beta * prey * pred, delta * prey * pred - gamma * pred]
        },
        &[cfg.prey0, cfg.pred0],
        cfg.dt,
        steps,
        |n, t, y| {
            if y.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::Integration {
                    t,
                    reason: format!("population left the positive orthant at step {n}"),
                });
            }
            Ok(())
        },
    )?;

    Ok(PredPreyTrajectories {
        t,
        prey: states.iter().map(|s| s[0]).collect(),
        predator: states.iter().map(|s| s[1]).collect(),
        alpha,
    })
}

pub(crate) fn step_count(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize
}

fn time_grid(steps: usize, dt: f64) -> Vec<f64> {
    (0..=steps).map(|n| n as f64 * dt).collect()
}

fn exogenous(len: usize, amp: f64, cutoff: f64, seed: u64, stream: u64) -> Result<Vec<f64>> {
    if amp == 0.0 {
        return Ok(vec![0.0; len]);
    }
    Ok(smoothed_noise_stream(len, cutoff, seed, stream)?.into_iter().map(|v| amp * v).collect())
}

fn finite_state(t: f64, y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration { t, reason: "non-finite state".into() })
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, "must be finite"))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be > 0, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be >= 0, got {v}")))
    }
}

fn cutoff(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must lie in (0, 1), got {v}")))
    }
}

fn grid(prefix: &str, duration: f64, dt: f64) -> Result<()> {
    positive(&format!("{prefix}.dt"), dt)?;
    if !(duration >= 100.0 * dt) {
        return Err(Error::config(format!("{prefix}.duration"), "must be at least 100 * dt"));
    }
    Ok(())
}
