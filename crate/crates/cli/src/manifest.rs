use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one run, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub inputs: BTreeMap<String, InputDigest>,
    pub duration_seconds: f64,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(
        command: &str,
        parameters: BTreeMap<String, String>,
        seed: u64,
        inputs: &[(&str, &Path)],
        start: Instant,
    ) -> anyhow::Result<Self> {
        let mut digests = BTreeMap::new();
        for (name, path) in inputs {
            digests.insert(
                name.to_string(),
                InputDigest { path: path.display().to_string(), sha256: sha256_file(path)? },
            );
        }
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters,
            seed,
            inputs: digests,
            duration_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(dir.join(FILE_NAME), text)?;
        Ok(())
    }
}
