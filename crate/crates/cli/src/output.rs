//! Output directory with a manifest of everything written to it.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    rerun: String,
    seed: u64,
    rng: &'static str,
    config: &'a RunConfig,
    files: Vec<FileEntry>,
}

pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    /// The directory is created on the first write.
    pub fn new(root: &Path) -> Self {
        OutputDir { root: root.to_path_buf(), files: Vec::new() }
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.root).map_err(|e| CliError::Io(format!("{}: {e}", self.root.display())))?;
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_bytes(name, text.as_bytes())
    }

    /// Collects CSV output from `fill` and writes it.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> labsearch::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(CliError::Run)?;
        self.write_bytes(name, &buf)
    }

    /// Writes the resolved config and the manifest. The manifest lists files
    /// in name order so reruns produce identical bytes.
    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<(), CliError> {
        self.write_text("config.toml", &config.to_toml())?;
        let mut files = std::mem::take(&mut self.files);
        files.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = Manifest {
            tool: "labsearch",
            version: env!("CARGO_PKG_VERSION"),
            command,
            rerun: format!("labsearch {command} --config config.toml"),
            seed: config.seed(),
            rng: labsearch::simulator::rng::RNG_SCHEME,
            config,
            files,
        };
        self.write_json("manifest.json", &manifest)
    }
}
