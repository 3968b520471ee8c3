//! Deterministic file output: rounded numbers, sorted JSON, run manifests.
//!
//! Every number leaving the tool is rounded to 12 significant digits first,
//! so that repeated runs with the same inputs produce byte-identical JSON
//! and CSV files across platforms, and every primary output is accompanied
//! by a `<output>.manifest.json` recording the command, the resolved flags,
//! and a digest of the grid file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Round to 12 significant digits (the precision of all file output).
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float")
}

/// Scientific-notation string with 12 significant digits, for CSV cells.
pub fn fmt_sig(x: f64) -> String {
    format!("{:.11e}", x)
}

/// JSON number carrying 12 significant digits.
pub fn num(x: f64) -> Value {
    Value::from(sig12(x))
}

/// Hex SHA-256 digest of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Pretty-print a JSON value with a trailing newline. Maps serialize with
/// sorted keys, so equal values give equal bytes.
pub fn to_json_bytes(value: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

/// Provenance record written next to every primary output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Subcommand name.
    pub command: String,
    /// Resolved flag values, sorted by flag name.
    pub flags: BTreeMap<String, String>,
    /// SHA-256 of the grid file bytes.
    pub grid_sha256: String,
    /// Sampling seed, when the command uses one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Crate version.
    pub version: String,
    /// Wall-clock duration of the run in milliseconds.
    pub duration_ms: u128,
}

impl RunManifest {
    /// Start a manifest for a subcommand over a grid file.
    pub fn begin(command: &str, grid_bytes: &[u8]) -> ManifestBuilder {
        ManifestBuilder {
            command: command.to_string(),
            flags: BTreeMap::new(),
            grid_sha256: sha256_hex(grid_bytes),
            seed: None,
            started: Instant::now(),
        }
    }
}

/// Accumulates manifest fields while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    command: String,
    flags: BTreeMap<String, String>,
    grid_sha256: String,
    seed: Option<u64>,
    started: Instant,
}

impl ManifestBuilder {
    /// Record one resolved flag.
    pub fn flag(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.flags.insert(name.to_string(), value.to_string());
        self
    }

    /// Record the sampling seed.
    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    /// Finish timing and produce the manifest.
    pub fn finish(&self) -> RunManifest {
        RunManifest {
            command: self.command.clone(),
            flags: self.flags.clone(),
            grid_sha256: self.grid_sha256.clone(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_ms: self.started.elapsed().as_millis(),
        }
    }
}

/// Path of the manifest that accompanies an output file.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".manifest.json");
    output.with_file_name(name)
}

/// Write a manifest next to its primary output.
pub fn write_manifest(output: &Path, manifest: &RunManifest) -> Result<()> {
    let value = serde_json::to_value(manifest).expect("serializable manifest");
    std::fs::write(manifest_path(output), to_json_bytes(&value))?;
    Ok(())
}
