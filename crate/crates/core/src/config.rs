//! TOML run configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::datasets::OmnistSpec;
use crate::harness::Protocol;
use crate::snn::{HomeostasisParams, NetworkParams, StStdpParams, TripletParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlasticityConfig {
    pub triplet: TripletParams,
    pub homeostasis: HomeostasisParams,
    pub st_stdp: StStdpParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Directory holding the MNIST IDX files.
    pub mnist_dir: PathBuf,
    /// Training images used (from the start of the training set); 0 = all.
    pub train_images: usize,
    /// Images used for neuron labeling; 0 = same as training.
    pub label_images: usize,
    pub omnist: OmnistSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            mnist_dir: PathBuf::from("data/mnist"),
            train_images: 0,
            label_images: 0,
            omnist: OmnistSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub network: NetworkParams,
    pub plasticity: PlasticityConfig,
    pub protocol: Protocol,
    pub dataset: DatasetConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: vec![1],
            network: NetworkParams::default(),
            plasticity: PlasticityConfig::default(),
            protocol: Protocol::default(),
            dataset: DatasetConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seeds must not be empty".into()));
        }
        self.network.validate().map_err(|e| inv(&e))?;
        self.plasticity.st_stdp.validate().map_err(|e| inv(&e))?;
        self.protocol.validate().map_err(|e| inv(&e))?;
        self.dataset.omnist.validate().map_err(|e| inv(&e))?;
        Ok(())
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}
