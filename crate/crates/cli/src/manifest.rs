use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run record written next to a command's outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    command: String,
    engine_version: &'static str,
    timestamp: String,
    inputs: BTreeMap<String, String>,
    config_digest: Option<String>,
    outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            engine_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            inputs: BTreeMap::new(),
            config_digest: None,
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn config(&mut self, bytes: &[u8]) {
        self.config_digest = Some(sha256_hex(bytes));
    }

    pub fn output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        let path = dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_vec_pretty(self).map_err(|e| Failure::Internal(e.into()))?;
        json.push(b'\n');
        fs::write(&path, json)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Internal)
    }
}
