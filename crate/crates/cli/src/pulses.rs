//! On-disk pulse library: one JSON file per gate, keyed by gate name and the
//! hash of the ion and GRAPE settings that produced it.

use std::fs;
use std::path::{Path, PathBuf};

use hyperqubit::algorithms::PulseLibrary;
use hyperqubit::control::PulseSequence;
use hyperqubit::grape::{GateName, GrapeConfig};
use hyperqubit::ion::IonParams;
use serde::{Deserialize, Serialize};

use crate::config::{check_schema, RunConfig, SCHEMA_VERSION};
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    pub schema_version: u32,
    pub gate: String,
    pub config_hash: String,
    pub ion: IonParams,
    pub grape: GrapeConfig,
    pub fidelity: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sequence: PulseSequence,
}

impl PulseFile {
    pub fn new(
        cfg: &RunConfig,
        gate: GateName,
        fidelity: f64,
        iterations: usize,
        converged: bool,
        sequence: PulseSequence,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            gate: gate.to_string(),
            config_hash: cfg.pulse_hash(),
            ion: cfg.ion,
            grape: cfg.grape.clone(),
            fidelity,
            iterations,
            converged,
            sequence,
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let version = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0);
        check_schema(version as u32).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let file: Self = serde_json::from_value(value)?;
        file.sequence.validate(None)?;
        Ok(file)
    }
}

/// `<out>/pulses/<GATE>-<hash prefix>.json`.
pub fn relative_path(gate: GateName, hash: &str) -> PathBuf {
    PathBuf::from("pulses").join(format!("{gate}-{}.json", &hash[..16]))
}

/// Loads pulses for `gates` built with the current settings.
pub fn load(cfg: &RunConfig, gates: &[GateName]) -> Result<PulseLibrary, CliError> {
    let hash = cfg.pulse_hash();
    let mut lib = PulseLibrary::new();
    for &gate in gates {
        if lib.get(gate).is_some() {
            continue;
        }
        let path = cfg.output_dir.join(relative_path(gate, &hash));
        if !path.exists() {
            return Err(hyperqubit::Error::MissingPulse(gate.to_string()).into());
        }
        let file = PulseFile::read(&path)?;
        if file.config_hash != hash {
            return Err(CliError::Runtime(format!("{}: pulse was built for other settings", path.display())));
        }
        lib.insert(gate, file.sequence);
    }
    Ok(lib)
}
