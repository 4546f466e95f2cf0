//! Run manifests and artifact writing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::FORMAT_VERSION;

/// Everything that determines a command's output. Two runs with equal manifests produce
/// byte-identical artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_path: Option<String>,
    pub inputs: Vec<String>,
    pub options: BTreeMap<String, serde_json::Value>,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    /// SHA-256 over the contents of every input file, in order.
    pub input_digest: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            problem_path: None,
            inputs: Vec::new(),
            options: BTreeMap::new(),
            seeds: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest: digest_inputs(&[]),
        }
    }

    pub fn option(mut self, key: &str, value: impl Serialize) -> Self {
        self.options.insert(key.to_string(), serde_json::to_value(value).expect("option values serialize"));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seeds.push(seed);
        self
    }

    /// Record input files (path and contents).
    pub fn with_inputs(mut self, inputs: &[(&str, &[u8])]) -> Self {
        self.inputs = inputs.iter().map(|(p, _)| p.to_string()).collect();
        let blobs: Vec<&[u8]> = inputs.iter().map(|(_, b)| *b).collect();
        self.input_digest = digest_inputs(&blobs);
        self
    }
}

/// Hex SHA-256 of the length-prefixed concatenation of `blobs`.
pub fn digest_inputs(blobs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for b in blobs {
        h.update((b.len() as u64).to_le_bytes());
        h.update(b);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A command result together with the manifest that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<T> {
    pub format: u32,
    pub manifest: RunManifest,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(manifest: RunManifest, result: T) -> Self {
        Self { format: FORMAT_VERSION, manifest, result }
    }
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)
}
