//! File formats: CSV loaders for the input schemas, CSV/GeoJSON writers for
//! every result table, and the run manifest. All output is byte-stable for
//! identical inputs.

mod fmt;
mod load;
mod manifest;
mod write;

pub use fmt::{fmt_sig6, sig6};
pub use load::{
    load_corridor_rows, load_municipalities, load_network, load_roads, NetworkInputs,
    NetworkSource,
};
pub use manifest::{
    read_manifest, sha256_file, verify_inputs, write_manifest, InputDigest, ManifestParams,
    RunManifest, MANIFEST_FILE,
};
pub use write::{
    write_baseline_files, write_build_report, write_ccdf, write_comparison,
    write_corridor_rankings, write_hospital_frequency, write_hospital_impact,
    write_neighborhood_rankings, write_network_bundle, write_overlay_geojson,
    write_synth_inputs, write_travel_time_impacts, ComparisonRow,
};

use std::path::Path;

use thiserror::Error;

use crate::network::NetworkError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: column `{column}`: {message}")]
    Field {
        path: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("output directory `{path}` is not writable: {source}")]
    UnwritableOutput {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest `{path}`: {message}")]
    Manifest { path: String, message: String },
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Create the output directory and verify it is writable. Runs before any
/// sweep starts so a bad destination fails fast.
pub fn prepare_output_dir(dir: &Path) -> Result<(), IoError> {
    let unwritable = |source| IoError::UnwritableOutput {
        path: dir.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(unwritable)?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"probe").map_err(unwritable)?;
    std::fs::remove_file(&probe).map_err(unwritable)?;
    Ok(())
}
