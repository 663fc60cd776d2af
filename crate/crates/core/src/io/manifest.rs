//! Run provenance: input digests plus every parameter needed to reproduce a
//! run byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::{io_err, IoError};
use crate::synth::SynthParams;

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Result-determining parameters only; execution details like the worker
/// count stay out, since they cannot change a single output byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestParams {
    pub seed: u64,
    pub speed_kmh: f64,
    pub betweenness_cutoff_km: f64,
    pub thresholds_min: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub replicates: u32,
    pub measures: String,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: BTreeMap<String, InputDigest>,
    pub params: ManifestParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthParams>,
}

impl RunManifest {
    pub fn new(command: &str, params: ManifestParams) -> Self {
        RunManifest {
            tool: "corridor-stress".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: BTreeMap::new(),
            params,
            synth: None,
        }
    }

    pub fn record_input(&mut self, role: &str, path: &Path) -> Result<(), IoError> {
        self.inputs.insert(
            role.to_string(),
            InputDigest {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            },
        );
        Ok(())
    }

    pub fn input_path(&self, role: &str) -> Option<PathBuf> {
        self.inputs.get(role).map(|d| PathBuf::from(&d.path))
    }
}

pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf, IoError> {
    let path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(manifest).map_err(|e| IoError::Manifest {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, IoError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| IoError::Manifest {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Recompute every recorded input digest and fail on any drift.
pub fn verify_inputs(manifest: &RunManifest) -> Result<(), IoError> {
    for (role, digest) in &manifest.inputs {
        let path = PathBuf::from(&digest.path);
        let current = sha256_file(&path)?;
        if current != digest.sha256 {
            return Err(IoError::Manifest {
                path: digest.path.clone(),
                message: format!(
                    "input `{role}` changed since the manifest was written \
                     (recorded {}, found {current})",
                    digest.sha256
                ),
            });
        }
    }
    Ok(())
}
