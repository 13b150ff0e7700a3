use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Command;
use crate::error::{Error, Result};

pub const RUN_MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written next to the first output of a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub command: String,
    /// Every flag of the command, defaults included.
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<PathBuf>,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub library_version: String,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::from(e).in_file(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub(super) fn start(command: &Command) -> Result<Self> {
        let value = serde_json::to_value(command)?;
        // externally tagged: {"train": {...}}
        let (name, config) = match value {
            serde_json::Value::Object(map) if map.len() == 1 => map.into_iter().next().expect("one entry"),
            other => ("unknown".to_string(), other),
        };
        Ok(Self {
            version: RUN_MANIFEST_VERSION,
            command: name,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: now(),
            finished: 0.0,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }

    pub(super) fn input(&mut self, path: &Path) -> Result<()> {
        if self.inputs.iter().any(|i| i.path == path) {
            return Ok(());
        }
        let sha256 = sha256_file(path)?;
        self.inputs.push(InputHash { path: path.to_path_buf(), sha256 });
        Ok(())
    }

    pub(super) fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Path of the manifest for a command whose first output is `output`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    /// Stamps the finish time and writes the manifest; a no-op when the
    /// command produced nothing or the manifest is already written.
    pub(super) fn finish(&mut self) -> Result<()> {
        let Some(first) = self.outputs.first() else {
            return Ok(());
        };
        if self.finished > 0.0 {
            return Ok(());
        }
        self.finished = now();
        let path = Self::path_for(first);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(|e| Error::from(e).in_file(&path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
        serde_json::from_reader(f).map_err(|e| Error::from(e).in_file(path))
    }
}
