use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use endspin_core::{LinearFit, PowerLawFit};

use crate::args::Command;
use crate::CliResult;

/// Sidecar written next to every output file. Re-running `command` with the
/// same build reproduces every numeric column bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub master_seed: u64,
    pub timestamp: String,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    /// Wall-clock cost per record, in record order; not part of the CSV.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runtime_ms: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub min_n: usize,
    pub power_law: PowerLawFit,
    pub tmax_vs_n: LinearFit,
}

impl RunManifest {
    pub fn new(command: Command, master_seed: u64) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            master_seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: Vec::new(),
            fit: None,
            runtime_ms: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write_next_to(&self, output: &Path) -> CliResult<PathBuf> {
        let path = Self::path_for(output);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
