//! Run manifests: what was run, on which inputs, and a digest of what came out.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Full argument vector after the program name; replaying it reruns the job.
    pub args: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub workers: usize,
    /// Digest of the main JSON output.
    pub output_sha256: String,
    /// Files written besides the main output.
    pub side_outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(subcommand: &str, args: Vec<String>, seed: Option<u64>, workers: usize) -> Self {
        Self {
            schema: SCHEMA,
            tool: "perclab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            args,
            inputs: Vec::new(),
            seed,
            workers,
            output_sha256: String::new(),
            side_outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn set_output(&mut self, bytes: &[u8]) {
        self.output_sha256 = sha256_hex(bytes);
    }

    pub fn add_side_output(&mut self, path: &Path, bytes: &[u8]) {
        self.side_outputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(bytes) });
    }

    /// Inputs whose current contents no longer match the recorded digest.
    pub fn stale_inputs(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for i in &self.inputs {
            if sha256_hex(&std::fs::read(&i.path)?) != i.sha256 {
                out.push(i.path.clone());
            }
        }
        Ok(out)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.schema != SCHEMA {
            return Err(Error::Unsupported(format!("manifest schema {} (expected {SCHEMA})", m.schema)));
        }
        Ok(m)
    }
}
