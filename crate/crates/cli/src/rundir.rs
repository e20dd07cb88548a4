//! Run directories: every command reads its inputs from and writes its outputs into one
//! directory, and every written file is recorded with its SHA-256 in `manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Name of the manifest file.
pub const MANIFEST: &str = "manifest.json";
/// Name of the echoed configuration.
pub const CONFIG: &str = "config.toml";
/// Environment variable selecting the default output root.
pub const OUT_ROOT_ENV: &str = "BLOWUP_OUT_ROOT";

/// One produced file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Hex SHA-256 of the contents.
    pub sha256: String,
    /// Size in bytes.
    pub bytes: u64,
}

/// Provenance record of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the resolved configuration text.
    pub config_hash: String,
    /// Version of the producing program.
    pub code_version: String,
    /// Creation time, seconds since the Unix epoch.
    pub created_unix: u64,
    /// Last update time, seconds since the Unix epoch.
    pub updated_unix: u64,
    /// Produced files keyed by path relative to the run directory.
    pub files: BTreeMap<String, FileEntry>,
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Default run directory `<root>/run-<hash prefix>`, with the root taken from
/// [`OUT_ROOT_ENV`] or `runs`.
pub fn default_run_dir(cfg: &RunConfig) -> PathBuf {
    let root = std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    let hash = sha256_hex(cfg.to_toml().as_bytes());
    root.join(format!("run-{}", &hash[..12]))
}

/// An open run directory with its manifest.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    /// Creates (or reuses) `root`, echoes the resolved configuration and starts a manifest.
    pub fn create(root: &Path, cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let text = cfg.to_toml();
        let t = now();
        let mut dir = Self {
            root: root.to_path_buf(),
            manifest: RunManifest {
                config_hash: sha256_hex(text.as_bytes()),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                created_unix: t,
                updated_unix: t,
                files: BTreeMap::new(),
            },
        };
        dir.write_bytes(CONFIG, text.as_bytes())?;
        dir.save_manifest()?;
        Ok(dir)
    }

    /// Opens an existing run directory.
    pub fn open(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        if !path.is_file() {
            return Err(CliError::MissingInput(format!("{} is not a run directory (no {MANIFEST})", root.display())));
        }
        let manifest = read_json(&path)?;
        Ok(Self { root: root.to_path_buf(), manifest })
    }

    /// Root path.
    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Current manifest.
    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    /// The echoed configuration.
    pub fn config(&self) -> Result<RunConfig> {
        RunConfig::load(&self.root.join(CONFIG))
    }

    /// Absolute path of a relative entry.
    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes a file and records it.
    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest.files.insert(rel.to_string(), FileEntry { sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    /// Writes pretty JSON.
    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format { path: rel.to_string(), message: e.to_string() })?;
        self.write_bytes(rel, text.as_bytes())
    }

    /// Writes an RFC-4180 CSV of numeric rows with full round-trip precision.
    pub fn write_csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let bytes = csv_bytes(header, rows).map_err(|message| CliError::Format { path: rel.to_string(), message })?;
        self.write_bytes(rel, &bytes)
    }

    /// Reads a JSON entry.
    pub fn read_json<T: DeserializeOwned>(&self, rel: &str) -> Result<T> {
        let path = self.root.join(rel);
        if !path.is_file() {
            return Err(CliError::MissingInput(format!("{} (run an earlier stage first)", path.display())));
        }
        read_json(&path)
    }

    /// Stamps and writes the manifest.
    pub fn save_manifest(&mut self) -> Result<()> {
        self.manifest.updated_unix = now();
        let path = self.root.join(MANIFEST);
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Format { path: MANIFEST.into(), message: e.to_string() })?;
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    /// Entries whose current contents no longer match the recorded checksum.
    pub fn verify_checksums(&self) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (rel, entry) in &self.manifest.files {
            let path = self.root.join(rel);
            let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            if sha256_hex(&bytes) != entry.sha256 {
                bad.push(rel.clone());
            }
        }
        Ok(bad)
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format { path: path.display().to_string(), message: e.to_string() })
}

/// CSV bytes of numeric rows; `f64` values use the shortest representation that round-trips.
pub fn csv_bytes(header: &[&str], rows: &[Vec<f64>]) -> std::result::Result<Vec<u8>, String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for row in rows {
        if row.len() != header.len() {
            return Err(format!("row of {} values under a header of {}", row.len(), header.len()));
        }
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| e.to_string())?;
    }
    w.into_inner().map_err(|e| e.to_string())
}

/// Parses a numeric CSV written by [`csv_bytes`] into its header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let fail = |message: String| CliError::Format { path: path.display().to_string(), message };
    let mut r = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let header = r.headers().map_err(|e| fail(e.to_string()))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        rows.push(rec.iter().map(|v| v.parse::<f64>().map_err(|e| fail(format!("`{v}`: {e}")))).collect::<Result<Vec<_>>>()?);
    }
    Ok((header, rows))
}
