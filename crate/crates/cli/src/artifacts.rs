//! Run manifests and write-once file helpers.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use anyhow::{bail, Context, Result};
use epiplan::env::EnvName;
use epiplan::ExperimentConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Train,
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedStatus {
    Completed,
    /// Stopped at the wall-clock deadline.
    Partial,
    /// Not started because the deadline had passed.
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub status: SeedStatus,
    /// Highest cumulative reward: best training episode, or the single baseline episode.
    pub value: Option<f64>,
    pub greedy_return: Option<f64>,
    pub timesteps: Option<usize>,
    pub error: Option<String>,
}

impl SeedResult {
    pub fn skipped(seed: u64) -> Self {
        Self {
            seed,
            status: SeedStatus::Skipped,
            value: None,
            greedy_return: None,
            timesteps: None,
            error: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: RunKind,
    pub env: EnvName,
    /// Algorithm or baseline policy, as shown in comparison tables.
    pub label: String,
    /// SHA-256 of the canonical effective configuration.
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub seed_rule: String,
    pub output_dir: PathBuf,
    pub started: String,
    pub finished: String,
    /// True when every seed completed.
    pub completed: bool,
    /// Paths relative to `output_dir`, including this manifest.
    pub artifacts: Vec<String>,
    pub results: Vec<SeedResult>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed manifest {}", path.display()))
    }
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let json = config.canonical_json()?;
    Ok(hex::encode(Sha256::digest(json.as_bytes())))
}

pub fn timestamp() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

/// Creates `dir` and its parents, failing if `dir` already exists.
pub fn create_fresh_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        bail!(
            "{} already exists; refusing to overwrite a previous run (choose another --out)",
            dir.display()
        );
    }
    if let Some(parent) = dir.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::create_dir(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Writes a new file; never replaces an existing one.
pub fn write_new(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(bytes)
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_new(path, text.as_bytes())
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    write_new(path, &w.into_inner()?)
}

/// Collects artifact paths relative to a run directory.
pub struct ArtifactSet {
    root: PathBuf,
    files: Vec<String>,
}

impl ArtifactSet {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Records `relative` and returns its full path.
    pub fn path(&mut self, relative: impl Into<String>) -> PathBuf {
        let relative = relative.into();
        let p = self.root.join(&relative);
        self.record(relative);
        p
    }

    pub fn record(&mut self, relative: impl Into<String>) {
        self.files.push(relative.into());
    }

    pub fn into_files(self) -> Vec<String> {
        self.files
    }
}
