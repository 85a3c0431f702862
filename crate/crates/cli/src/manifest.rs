//! Run manifests: what a command read and with which settings, reduced to a
//! digest stamped on every output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use wifitrace::ingest::Record;
use wifitrace::model::Config;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputDigest {
    pub user: String,
    pub records: usize,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(user: &str, records: &[Record]) -> Self {
        let mut h = Sha256::new();
        h.update(user.as_bytes());
        h.update(b"\n");
        for r in records {
            h.update(r.to_line().as_bytes());
            h.update(b"\n");
        }
        Self { user: user.to_string(), records: records.len(), sha256: format!("{:x}", h.finalize()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub config: Config,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    /// Only filled in when timings are requested; never part of the digest.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub stage_timings_ms: BTreeMap<String, u128>,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            stage_timings_ms: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.to_string(), serde_json::to_value(value).expect("parameter serializes"));
    }

    /// SHA-256 over command, parameters, config and input digests.
    pub fn digest(&self) -> String {
        let stable = serde_json::json!({
            "command": self.command,
            "parameters": self.parameters,
            "config": self.config,
            "inputs": self.inputs,
        });
        format!("{:x}", Sha256::digest(stable.to_string().as_bytes()))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut body = serde_json::to_value(self).expect("manifest serializes");
        body["digest"] = self.digest().into();
        let mut text = serde_json::to_string_pretty(&body).expect("manifest serializes");
        text.push('\n');
        crate::output::write_file(&dir.join("manifest.json"), text.as_bytes())
    }
}
