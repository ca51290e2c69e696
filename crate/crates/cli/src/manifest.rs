use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub assertion: f64,
    pub integer: f64,
    pub newton: f64,
    pub min_box: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationInfo {
    pub levels: usize,
    pub m_count: usize,
    pub axial_nodes: usize,
    pub dimension: usize,
    pub channels: usize,
}

/// Everything needed to reproduce and audit one command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: diracloc::config::RunConfig,
    pub seed: u64,
    pub threads: usize,
    pub tolerances: Tolerances,
    pub truncation: TruncationInfo,
    pub outputs: Vec<OutputFile>,
    pub checks: Vec<CheckSummary>,
    /// Wall-clock seconds per phase; excluded from `content_hash`.
    pub timings: Vec<(String, f64)>,
    /// sha256 of the manifest with timings and this field blanked.
    pub content_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn describe_file(out_dir: &Path, path: &Path) -> CliResult<OutputFile> {
    let data = fs::read(path).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rel = path.strip_prefix(out_dir).unwrap_or(path);
    Ok(OutputFile {
        path: rel.display().to_string(),
        bytes: data.len() as u64,
        sha256: sha256_hex(&data),
    })
}

impl RunManifest {
    pub fn seal(&mut self) -> CliResult<()> {
        let mut copy = self.clone();
        copy.timings.clear();
        copy.content_hash.clear();
        let json = serde_json::to_vec(&copy).map_err(|e| CliError::Output {
            path: PathBuf::from("manifest"),
            message: e.to_string(),
        })?;
        self.content_hash = sha256_hex(&json);
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<PathBuf> {
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
        fs::write(&path, json).map_err(|e| CliError::Output {
            path: path.clone(),
            message: e.to_string(),
        })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
