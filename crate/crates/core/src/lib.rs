//! Sensor pruning for nonlinear state observers built on liquid
//! time-constant (LTC) networks.
//!
//! The pipeline simulates a testbed, trains an LTC observer on all candidate
//! sensors, ranks the sensors by perturbation-based causal influence and
//! iteratively drops the weak ones.

// `!(x > 0.0)` is used on purpose so NaN fails validation; indexed loops
// mirror the per-neuron equations.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod causality;
pub mod cli;
pub mod config;
pub mod error;
pub mod ltc;
pub mod pruner;
pub mod report;
pub mod testbed;
pub mod train;

pub use error::{Error, Result};

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
