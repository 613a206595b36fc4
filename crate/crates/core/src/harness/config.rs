use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DependencyConfig, RegionalConfig};
use crate::error::{Error, Result};
use crate::hash::digest_hex;
use crate::objectbase::DbParams;
use crate::policy::{PolicyConfig, PolicyKind};
use crate::storage::StorageConfig;

/// Grid for `sweep`: the cross product of `h_values` and `policies`, once
/// per seed in `seeds` (or the experiment seed when empty).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub h_values: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            h_values: vec![0.0, 1e-4, 6e-4, 1e-2, 1.0],
            policies: PolicyKind::ALL.to_vec(),
            seeds: Vec::new(),
        }
    }
}

/// Everything one run depends on. Its defaults are the reference setup:
/// 100000 objects over 50 classes, 4 KB pages, a 4 MB LRU buffer, 10000
/// depth-2 traversals, and a 0.3% hot region taking 80% of roots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_transactions: u64,
    pub traversal_depth: u32,
    /// Seed of the workload stream. The database has its own seed in `db`.
    pub seed: u64,
    /// Partition dependency candidate sets into H-regions instead of
    /// drawing from them uniformly.
    pub integration: bool,
    pub db: DbParams,
    pub storage: StorageConfig,
    pub regional: RegionalConfig,
    pub dependency: DependencyConfig,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_transactions: 10_000,
            traversal_depth: 2,
            seed: 1,
            integration: false,
            db: DbParams::default(),
            storage: StorageConfig::default(),
            regional: RegionalConfig::default(),
            dependency: DependencyConfig::default(),
            policy: PolicyConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_transactions == 0 {
            return Err(Error::config("num_transactions", "must be at least 1"));
        }
        self.db.validate()?;
        self.storage.validate()?;
        self.regional.validate()?;
        self.dependency.validate()?;
        self.policy.validate()?;
        for &h in &self.sweep.h_values {
            if !(0.0..=1.0).contains(&h) {
                return Err(Error::config(
                    "sweep.h_values",
                    format!("{h} is outside [0, 1]"),
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Stable fingerprint of the serialized config.
    pub fn digest(&self) -> String {
        digest_hex(self.to_toml().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn names_offending_field() {
        let mut c = ExperimentConfig::default();
        c.regional.hr_size = 0.0;
        let text = c.to_toml();
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "regional.hr_size"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = ExperimentConfig::default()
            .to_toml()
            .replace("hr_size", "hr_sise");
        assert!(ExperimentConfig::from_toml(&text).unwrap_err().is_config());
    }

    #[test]
    fn digest_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed = 2;
        assert_ne!(a.digest(), b.digest());
    }
}
