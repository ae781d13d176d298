//! What a run read, how it was configured, and what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chainforge::milp::Objective;
use chainforge::pareto::Grid;
use chainforge::solver::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every permutation of every request.
    All,
    /// One rate-minimal graph per request.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Builtin,
    /// Write the LP file and stop.
    Export,
}

/// Externally tagged: buffered (tagged or flattened) enums lose floats under
/// serde_json's arbitrary precision numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Expand { mode: Mode, dot: bool },
    Place { mode: Mode, objective: Objective, backend: Backend, engine: Engine, time_limit: f64, threads: usize },
    Pareto { grid: Grid, engine: Engine, time_limit: f64, threads: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path) -> Result<Self, Failure> {
        let path = fs::canonicalize(path).map_err(|e| Failure::io(path, e))?;
        let sha256 = sha256_file(&path)?;
        Ok(FileRecord { path, sha256 })
    }

    /// Fails when the file changed since it was recorded.
    pub fn verify(&self) -> Result<(), Failure> {
        let now = sha256_file(&self.path)?;
        if now != self.sha256 {
            return Err(Failure::semantic(format!(
                "{} changed since the run (sha256 {} recorded, {} now)",
                self.path.display(),
                self.sha256,
                now
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inputs {
    pub network: FileRecord,
    pub catalog: FileRecord,
    pub requests: FileRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub inputs: Inputs,
    pub command: Command,
    /// Relative to the run directory.
    pub outputs: Vec<FileRecord>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Failure::semantic(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write(&dir.join(MANIFEST), &text)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}
