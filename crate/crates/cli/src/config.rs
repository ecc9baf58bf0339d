use std::fs;
use std::path::{Path, PathBuf};

use hyperqubit::grape::GrapeConfig;
use hyperqubit::ion::IonParams;
use hyperqubit::multi_ion::TwoIonSystem;
use hyperqubit::tomography::NoiseModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Version written into, and required of, every JSON file.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub ion: IonParams,
    pub grape: GrapeConfig,
    pub noise: NoiseModel,
    pub multiion: TwoIonSystem,
    pub output_dir: PathBuf,
    /// Master seed; overrides the GRAPE and noise seeds and drives shot noise.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            ion: IonParams::default(),
            grape: GrapeConfig::default(),
            noise: NoiseModel::line_triggered(),
            multiion: TwoIonSystem::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        check_schema(cfg.schema_version)?;
        Ok(cfg)
    }

    /// Applies command-line overrides and propagates the master seed.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(out) = out {
            self.output_dir = out;
        }
        self.grape.rng_seed = self.seed;
        self.noise.rng_seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_schema(self.schema_version)?;
        let invalid = |e: hyperqubit::Error| CliError::Config(e.to_string());
        self.ion.validate().map_err(invalid)?;
        self.grape.validate().map_err(invalid)?;
        self.noise.validate().map_err(invalid)?;
        self.multiion.validate().map_err(invalid)?;
        Ok(())
    }

    /// SHA-256 over the settings a pulse depends on.
    pub fn pulse_hash(&self) -> String {
        let key = serde_json::json!({ "ion": self.ion, "grape": self.grape });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }
}

pub fn check_schema(found: u32) -> Result<(), CliError> {
    if found != SCHEMA_VERSION {
        return Err(CliError::Config(format!("unsupported schema_version {found} (expected {SCHEMA_VERSION})")));
    }
    Ok(())
}
