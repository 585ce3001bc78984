//! The single TOML run configuration: one section per module.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::causality::PerturbationSpec;
use crate::error::{Error, Result};
use crate::pruner::PruneConfig;
use crate::testbed::{DataConfig, TestbedConfigs};
use crate::train::TrainConfig;

/// ```toml
/// [mechanical]
/// c = 0.5
///
/// [train]
/// max_epochs = 50
///
/// [prune]
/// degradation_tol = 0.2
/// ```
///
/// Missing sections and keys take their defaults; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(flatten)]
    pub testbeds: TestbedConfigs,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub perturbation: PerturbationSpec,
    pub prune: PruneConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config("config", e.message().trim()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.testbeds.mechanical.validate()?;
        self.testbeds.cstr.validate()?;
        self.testbeds.predprey.validate()?;
        self.data.validate()?;
        self.train.validate()?;
        self.perturbation.validate()?;
        self.prune_config().validate()
    }

    /// Pruning settings combined with the training and perturbation sections.
    pub fn prune_config(&self) -> PruneConfig {
        PruneConfig { spec: self.perturbation.clone(), train: self.train.clone(), ..self.prune.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override_fields() {
        let cfg = RunConfig::from_toml("[mechanical]\nc = 0.5\n[train]\nmax_epochs = 7\n[prune]\nmin_sensors = 2\n").unwrap();
        assert_eq!(cfg.testbeds.mechanical.c, 0.5);
        assert_eq!(cfg.train.max_epochs, 7);
        assert_eq!(cfg.prune_config().min_sensors, 2);
        assert_eq!(cfg.prune_config().train.max_epochs, 7);
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.train.lr = 0.1 + 0.2;
        cfg.testbeds.cstr.seed = 17;
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = RunConfig::from_toml("[mechanical]\nm = -1.0\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("m"), "{err}");
        assert!(matches!(RunConfig::from_toml("[train]\nbogus = 1\n"), Err(Error::Config { .. })));
        assert!(matches!(RunConfig::from_toml("[train]\nlr = 0.0\n"), Err(Error::Config { .. })));
    }
}
