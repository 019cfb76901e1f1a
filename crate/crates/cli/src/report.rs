//! Experiment reports and run directories.

use crate::config::{Command, LoadedConfig};
use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "DELAYREC_OUT";

/// A file produced by a command, written into the run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn new(file_name: impl Into<String>, contents: impl Into<Vec<u8>>) -> Self {
        Self {
            file_name: file_name.into(),
            contents: contents.into(),
        }
    }
}

/// What a command produced, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Execution {
    pub command: Command,
    pub passed: bool,
    /// One human-readable line per check.
    pub summary: Vec<String>,
    pub payload: Value,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub command: Command,
    pub tool_version: String,
    pub seed: Option<u64>,
    /// The config file, verbatim.
    pub config: String,
    /// SHA-256 over tool version, command, seed and config text.
    pub provenance: String,
    pub wall_time_seconds: f64,
    pub passed: bool,
    pub payload: Value,
}

pub fn provenance_hash(config_text: &str, command: Command, seed: Option<u64>) -> String {
    let mut hasher = Sha256::new();
    for part in [
        TOOL_VERSION,
        command.name(),
        &seed.map_or_else(|| "none".to_string(), |s| s.to_string()),
        config_text,
    ] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    format!("{:x}", hasher.finalize())
}

/// Output root: `--out`, then the config's `output`, then `$DELAYREC_OUT`,
/// then `runs`.
pub fn output_root(flag: Option<&Path>, loaded: &LoadedConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| loaded.config.output.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub fn payload_bytes(payload: &Value) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(payload)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `report.json`, `payload.json` and the artifacts into `dir`,
/// replacing earlier files of the same names.
pub fn write_run(dir: &Path, report: &ExperimentReport, artifacts: &[Artifact]) -> CliResult<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files = vec![
        Artifact::new("report.json", {
            let mut b = serde_json::to_vec_pretty(report)?;
            b.push(b'\n');
            b
        }),
        Artifact::new("payload.json", payload_bytes(&report.payload)?),
    ];
    files.extend(artifacts.iter().cloned());
    for file in &files {
        let path = dir.join(&file.file_name);
        std::fs::write(&path, &file.contents).map_err(io(&path))?;
    }
    Ok(())
}

/// Serializes rows as CSV with a header line.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_depends_on_every_input() {
        let a = provenance_hash("x = 1", Command::Entropy, Some(1));
        assert_eq!(a.len(), 64);
        assert_eq!(a, provenance_hash("x = 1", Command::Entropy, Some(1)));
        assert_ne!(a, provenance_hash("x = 1", Command::Entropy, Some(2)));
        assert_ne!(a, provenance_hash("x = 1", Command::Entropy, None));
        assert_ne!(a, provenance_hash("x = 2", Command::Entropy, Some(1)));
        assert_ne!(a, provenance_hash("x = 1", Command::Tsp, Some(1)));
    }

    #[test]
    fn csv_has_a_header() {
        #[derive(Serialize)]
        struct Row {
            n: usize,
            value: f64,
        }
        let bytes = csv_bytes(&[Row { n: 1, value: 0.5 }, Row { n: 2, value: 0.25 }]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "n,value\n1,0.5\n2,0.25\n");
    }
}
