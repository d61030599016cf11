use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[derive(Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub deterministic: bool,
    pub threads: usize,
    pub artifacts: Vec<Artifact>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

/// Collects artifacts written under one output directory, plus phase timings.
pub struct ArtifactSink {
    root: PathBuf,
    manifest: RunManifest,
    phase: Option<(String, Instant)>,
}

impl ArtifactSink {
    pub fn new(root: &Path, command: &str, config_text: &str, seed: u64, deterministic: bool) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                config_sha256: sha256_hex(config_text.as_bytes()),
                seed,
                deterministic,
                threads: rayon::current_num_threads(),
                artifacts: Vec::new(),
                timings: BTreeMap::new(),
            },
            phase: None,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Start timing a phase, closing the previous one.
    pub fn phase(&mut self, name: &str) {
        self.end_phase();
        self.phase = Some((name.to_string(), Instant::now()));
    }

    fn end_phase(&mut self) {
        if let Some((name, t0)) = self.phase.take() {
            *self.manifest.timings.entry(name).or_insert(0.0) += t0.elapsed().as_secs_f64();
        }
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.artifacts.push(Artifact { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn artifact_count(&self) -> usize {
        self.manifest.artifacts.len()
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.end_phase();
        let path = self.root.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(path)
    }
}
