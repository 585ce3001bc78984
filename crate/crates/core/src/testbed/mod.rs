//! Synthetic testbed data: simulation, noise channels, standardization and
//! chronological splitting.

mod dataset;
mod io;
mod noise;
mod rk4;
mod systems;

use serde::{Deserialize, Serialize};

pub use dataset::{
    assemble_dataset, chrono_split, custom_dataset, standardize, Channel, ChannelKind, ChannelMatrix, ChannelMeta, Segment, Split,
    Testbed, TimeSeriesDataset,
};
pub use io::{fmt_f64, read_dataset, write_dataset, DatasetMeta};
pub(crate) use io::{read_json, write_json};
pub use noise::smoothed_noise;
pub(crate) use noise::seeded_rng;
pub use rk4::rk4_step;
pub use systems::{
    simulate_cstr, simulate_mechanical, simulate_predprey, CstrConfig, CstrTrajectories, MechanicalConfig,
    MechanicalTrajectories, PredPreyConfig, PredPreyTrajectories, RawTrajectories,
};

use crate::error::{Error, Result};

/// Dataset assembly settings shared by all testbeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n_noise: usize,
    pub noise_cutoff: f64,
    pub train_frac: f64,
    pub val_frac_of_train: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { n_noise: 3, noise_cutoff: 0.02, train_frac: 0.8, val_frac_of_train: 0.2 }
    }
}

impl DataConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_cutoff > 0.0 && self.noise_cutoff < 1.0) {
            return Err(Error::config("data.noise_cutoff", "must lie in (0, 1)"));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::config("data.train_frac", "must lie in (0, 1)"));
        }
        if !(self.val_frac_of_train > 0.0 && self.val_frac_of_train < 1.0) {
            return Err(Error::config("data.val_frac_of_train", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Per-testbed simulator settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestbedConfigs {
    pub mechanical: MechanicalConfig,
    pub cstr: CstrConfig,
    pub predprey: PredPreyConfig,
}

impl TestbedConfigs {
    pub fn seed(&self, testbed: Testbed) -> u64 {
        match testbed {
            Testbed::Mechanical => self.mechanical.seed,
            Testbed::Cstr => self.cstr.seed,
            Testbed::PredPrey => self.predprey.seed,
        }
    }

    /// Sets the RNG seed of every testbed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mechanical.seed = seed;
        self.cstr.seed = seed;
        self.predprey.seed = seed;
        self
    }
}

pub fn simulate(testbed: Testbed, cfgs: &TestbedConfigs) -> Result<RawTrajectories> {
    Ok(match testbed {
        Testbed::Mechanical => RawTrajectories::Mechanical(simulate_mechanical(&cfgs.mechanical)?),
        Testbed::Cstr => RawTrajectories::Cstr(simulate_cstr(&cfgs.cstr)?),
        Testbed::PredPrey => RawTrajectories::PredPrey(simulate_predprey(&cfgs.predprey)?),
    })
}

/// Simulates `testbed` and assembles its split dataset. The dataset noise
/// channels use the testbed seed on streams disjoint from the simulator's.
pub fn generate_dataset(
    testbed: Testbed,
    cfgs: &TestbedConfigs,
    data: &DataConfig,
    warmup: usize,
) -> Result<TimeSeriesDataset> {
    let raw = simulate(testbed, cfgs)?;
    let ds = assemble_dataset(&raw, data.n_noise, data.noise_cutoff, cfgs.seed(testbed))?;
    chrono_split(ds, data.train_frac, data.val_frac_of_train, warmup)
}
