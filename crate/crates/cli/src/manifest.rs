//! Per-stage run manifests: tool version, configuration hash, and SHA-256
//! digests of every input read and artifact written.
//!
//! Manifests contain no timestamps or host-specific paths, so two runs
//! with identical configuration and inputs produce byte-identical
//! manifests — that is the mechanical check behind "reruns are
//! reproducible".

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Effective;
use crate::error::CliError;

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    stage: &'a str,
    config_sha256: &'a str,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Records digests of everything a stage touches, then writes the
/// stage manifest.
pub struct StageContext<'a> {
    pub eff: &'a Effective,
    config_sha256: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl<'a> StageContext<'a> {
    pub fn new(eff: &'a Effective) -> Result<StageContext<'a>, CliError> {
        std::fs::create_dir_all(&eff.out_dir)
            .map_err(|e| CliError::io(eff.out_dir.display().to_string(), e))?;
        Ok(StageContext {
            eff,
            config_sha256: eff.config_sha256(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    fn basename(path: &Path) -> String {
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string())
    }

    /// Read an external input file, recording its digest under its
    /// basename.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        self.inputs.insert(Self::basename(path), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn artifact_path(&self, name: &str) -> PathBuf {
        self.eff.out_dir.join(name)
    }

    /// Read an artifact a previous stage wrote into the output directory.
    pub fn read_artifact(&mut self, name: &str, hint: &str) -> Result<Vec<u8>, CliError> {
        let path = self.artifact_path(name);
        let bytes = std::fs::read(&path).map_err(|_| CliError::MissingArtifact {
            path: path.display().to_string(),
            hint: hint.to_string(),
        })?;
        self.inputs.insert(name.to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    /// Like `read_artifact`, but absence is not an error.
    pub fn read_artifact_optional(&mut self, name: &str) -> Result<Option<Vec<u8>>, CliError> {
        let path = self.artifact_path(name);
        if !path.exists() {
            return Ok(None);
        }
        let bytes =
            std::fs::read(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        self.inputs.insert(name.to_string(), sha256_hex(&bytes));
        Ok(Some(bytes))
    }

    /// Write an artifact into the output directory, recording its digest.
    pub fn write_artifact(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.artifact_path(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Record an artifact produced by a nested stage (pipeline use).
    pub fn record_output(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.artifact_path(name);
        let bytes =
            std::fs::read(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        self.outputs.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn has_artifact(&self, name: &str) -> bool {
        self.artifact_path(name).exists()
    }

    /// Write `manifest-<stage>.json` and consume the context.
    pub fn finish(self, stage: &str) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "cohortnet",
            version: env!("CARGO_PKG_VERSION"),
            stage,
            config_sha256: &self.config_sha256,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        let path = self.eff.out_dir.join(format!("manifest-{stage}.json"));
        std::fs::write(&path, &bytes).map_err(|e| CliError::io(path.display().to_string(), e))
    }
}
