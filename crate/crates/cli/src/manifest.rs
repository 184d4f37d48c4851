//! Run manifests: every file a command writes gets a sibling
//! `<file>.manifest.json` recording inputs, seed and outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    fn of(path: &Path, bytes: &[u8]) -> FileDigest {
        FileDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_secs: f64,
    pub outputs: Vec<FileDigest>,
}

/// Collects the files a command reads and writes.
pub struct Recorder {
    command: String,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<(PathBuf, FileDigest)>,
    start: Instant,
}

impl Recorder {
    pub fn new(command: &str) -> Recorder {
        Recorder { command: command.into(), seed: None, inputs: Vec::new(), outputs: Vec::new(), start: Instant::now() }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(FileDigest::of(path, &bytes));
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push((path.to_path_buf(), FileDigest::of(path, contents.as_bytes())));
        Ok(())
    }

    /// Writes one manifest next to each output.
    pub fn finish(self) -> Result<()> {
        if self.outputs.is_empty() {
            return Ok(());
        }
        let manifest = RunManifest {
            command: self.command,
            argv: std::env::args().collect(),
            inputs: self.inputs,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_secs: self.start.elapsed().as_secs_f64(),
            outputs: self.outputs.iter().map(|(_, d)| d.clone()).collect(),
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        for (path, _) in &self.outputs {
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            fs::write(PathBuf::from(name), &text)?;
        }
        Ok(())
    }
}
