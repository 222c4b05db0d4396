//! Reproducibility sidecars: every output file gets `<file>.meta.json`
//! carrying the tool version, the resolved configuration (and its hash),
//! and a digest of every input file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub config_sha256: String,
    /// input path -> sha256 of the file bytes
    pub inputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Meta {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        let canonical = serde_json::to_string(&config).expect("config serialises");
        Self {
            tool: "advner",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: sha256_hex(canonical.as_bytes()),
            config,
            inputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs
            .insert(path.display().to_string(), sha256_hex(bytes));
    }

    /// Write `<output>.meta.json` next to an output file.
    pub fn write_for(&self, output: &Path) -> std::io::Result<()> {
        let mut sidecar = output.as_os_str().to_owned();
        sidecar.push(".meta.json");
        let json = serde_json::to_string_pretty(self).expect("meta serialises");
        std::fs::write(sidecar, json)
    }
}
