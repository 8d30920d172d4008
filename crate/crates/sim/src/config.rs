//! TOML run files.
//!
//! A run file holds the [`SystemConfig`] keys at the top level plus the run
//! options below, so every CLI flag has a file equivalent:
//!
//! ```toml
//! num_aps = 50
//! num_users = 10
//! rng_seed = 7
//! modes = ["statistical", "beamforming_training"]
//! power_control = "maxmin"
//! threads = 4
//! out = "results"
//! ```

use std::path::{Path, PathBuf};

use cfmimo_core::{CsiMode, PowerControlPolicy, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

/// Run options that are not part of the system model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub modes: Option<Vec<CsiMode>>,
    pub power_control: Option<PowerControlPolicy>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub verbose: Option<bool>,
    /// Realizations drawn by the Gaussianity diagnostic.
    pub gaussianity_samples: Option<usize>,
}

const RUN_KEYS: [&str; 6] = ["modes", "power_control", "threads", "out", "verbose", "gaussianity_samples"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub system: SystemConfig,
    pub run: RunOptions,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut run = toml::Table::new();
        for key in RUN_KEYS {
            if let Some(v) = table.remove(key) {
                run.insert(key.to_string(), v);
            }
        }
        let system: SystemConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| e.to_string())?;
        let run: RunOptions = toml::Value::Table(run).try_into().map_err(|e: toml::de::Error| e.to_string())?;
        Ok(Self { system, run })
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        Self::parse(&text).map_err(|message| RunError::Config {
            path: path.to_path_buf(),
            message,
        })
    }
}

/// Parses a comma-separated mode list such as `statistical,perfect`.
pub fn parse_modes(list: &str) -> Result<Vec<CsiMode>, RunError> {
    let mut modes = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let mode: CsiMode = name.parse().map_err(|_| RunError::UnknownMode(name.to_string()))?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        return Err(RunError::NoModes);
    }
    Ok(modes)
}
