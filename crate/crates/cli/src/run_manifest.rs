//! `run_manifest.json`: every artifact a stage wrote into an output directory,
//! with its SHA-256 and write time.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const FILE_NAME: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: String,
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    /// Seconds since the Unix epoch.
    pub written_at: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    let digest = Sha256::digest(&bytes);
    let hex = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok((hex, bytes.len() as u64))
}

impl RunManifest {
    pub fn load_or_default(dir: &Path) -> Result<Self> {
        let path = dir.join(FILE_NAME);
        if !path.exists() {
            return Ok(RunManifest::default());
        }
        let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
        serde_json::from_str(&text).map_err(CliError::json(&path))
    }

    /// Hashes `files` (relative to `dir`) and records them under `stage`,
    /// replacing earlier entries for the same paths, then saves the manifest.
    pub fn record(dir: &Path, stage: &str, files: &[String]) -> Result<RunManifest> {
        let mut m = RunManifest::load_or_default(dir)?;
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        for rel in files {
            let (sha256, bytes) = sha256_file(&dir.join(rel))?;
            m.artifacts.retain(|a| &a.path != rel);
            m.artifacts.push(Artifact {
                stage: stage.to_string(),
                path: rel.clone(),
                sha256,
                bytes,
                written_at: now,
            });
        }
        m.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let path = dir.join(FILE_NAME);
        let text = serde_json::to_string_pretty(&m).map_err(CliError::json(&path))?;
        std::fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(m)
    }

    /// Paths whose current content no longer matches the recorded hash (or
    /// which are missing).
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| !matches!(sha256_file(&dir.join(&a.path)), Ok((h, _)) if h == a.sha256))
            .map(|a| a.path.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "abc").unwrap();
        let m = RunManifest::record(dir.path(), "test", &["a.txt".into()]).unwrap();
        assert_eq!(
            m.artifacts[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(m.verify(dir.path()).is_empty());
        std::fs::write(dir.path().join("a.txt"), "abd").unwrap();
        assert_eq!(RunManifest::load_or_default(dir.path()).unwrap().verify(dir.path()), vec!["a.txt"]);
    }
}
