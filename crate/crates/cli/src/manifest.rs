//! Run manifests: what a command read, what it wrote and with which settings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the effective configuration as canonical JSON.
    pub config_hash: String,
    pub config: serde_json::Value,
    /// Input path to SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    pub started: String,
    pub finished: String,
    pub warnings: Vec<String>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

pub fn config_hash(config: &serde_json::Value) -> String {
    // serde_json maps are ordered by key, so this rendering is canonical.
    sha256_bytes(config.to_string().as_bytes())
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Manifest { path, source })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|source| CliError::Manifest {
            path: path.clone(),
            source,
        })?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}

/// Checks that an upstream output directory has a manifest and that every
/// file it lists still has the recorded hash. With `force` problems become
/// warnings, which are returned.
pub fn check_upstream(dir: &Path, force: bool) -> Result<Vec<String>> {
    let problem = match RunManifest::read(dir) {
        Err(e) => Some(format!("cannot read manifest: {e}")),
        Ok(m) => m
            .outputs
            .iter()
            .find_map(|(name, want)| match sha256_file(&dir.join(name)) {
                Ok(h) if &h == want => None,
                Ok(_) => Some(format!("{name} changed since the manifest was written")),
                Err(_) => Some(format!("{name} is listed in the manifest but missing")),
            }),
    };
    match problem {
        None => Ok(Vec::new()),
        Some(reason) if force => {
            let msg = format!("ignoring stale input {}: {reason}", dir.display());
            log::warn!("{msg}");
            Ok(vec![msg])
        }
        Some(reason) => Err(CliError::Stale {
            dir: dir.to_path_buf(),
            reason,
        }),
    }
}

/// Collects inputs, outputs and warnings while a command runs.
#[derive(Debug)]
pub struct Recorder {
    command: String,
    out_dir: PathBuf,
    started: String,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl Recorder {
    pub fn new(command: &str, out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        Ok(Recorder {
            command: command.to_string(),
            out_dir: out_dir.to_path_buf(),
            started: chrono::Utc::now().to_rfc3339(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let h = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), h);
        Ok(())
    }

    /// Path of output file `name`, recorded for hashing at the end.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|n| n == name) {
            self.outputs.push(name.to_string());
        }
        self.out_dir.join(name)
    }

    pub fn create(&mut self, name: &str) -> Result<std::io::BufWriter<fs::File>> {
        let path = self.output(name);
        let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(std::io::BufWriter::new(f))
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn finish(self, config: serde_json::Value, seeds: Vec<u64>) -> Result<RunManifest> {
        let mut outputs = BTreeMap::new();
        for name in &self.outputs {
            outputs.insert(name.clone(), sha256_file(&self.out_dir.join(name))?);
        }
        let mut versions = BTreeMap::new();
        versions.insert("agenda".to_string(), env!("CARGO_PKG_VERSION").to_string());
        let manifest = RunManifest {
            command: self.command,
            config_hash: config_hash(&config),
            config,
            inputs: self.inputs,
            outputs,
            seeds,
            versions,
            started: self.started,
            finished: chrono::Utc::now().to_rfc3339(),
            warnings: self.warnings,
        };
        manifest.write(&self.out_dir)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn edited_output_is_stale() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = Recorder::new("test", dir.path()).unwrap();
        fs::write(rec.output("a.csv"), "x\n").unwrap();
        rec.finish(serde_json::json!({}), vec![]).unwrap();
        assert!(check_upstream(dir.path(), false).unwrap().is_empty());
        fs::write(dir.path().join("a.csv"), "y\n").unwrap();
        assert!(matches!(check_upstream(dir.path(), false), Err(CliError::Stale { .. })));
        assert_eq!(check_upstream(dir.path(), true).unwrap().len(), 1);
    }

    #[test]
    fn missing_manifest_is_stale() {
        let dir = tempfile::tempdir().unwrap();
        assert!(check_upstream(dir.path(), false).is_err());
    }
}
