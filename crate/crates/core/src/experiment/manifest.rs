use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::commands::Command;
use super::SCHEMA_VERSION;
use crate::{Error, Result};

/// What was run, with every default spelled out. Timestamps live here and
/// nowhere else, so replays can compare result files bitwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: Command,
    /// sha256 of the tool version and the serialized command.
    pub input_hash: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
}

pub fn input_hash(command: &Command) -> Result<String> {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(command)?);
    Ok(hex::encode(h.finalize()))
}

pub(crate) fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(command: Command, started_unix: u64, artifacts: Vec<String>) -> Result<Self> {
        Ok(RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_hash: input_hash(&command)?,
            command,
            started_unix,
            finished_unix: unix_now(),
            artifacts,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Reads a manifest and checks that its command still hashes to the
    /// recorded value.
    pub fn read(path: &Path) -> Result<Self> {
        let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::usage(format!("manifest schema {} is not supported", m.schema_version)));
        }
        if input_hash(&m.command)? != m.input_hash {
            return Err(Error::usage("manifest command does not match its input hash"));
        }
        Ok(m)
    }
}
