//! Atomic file output and the bundle manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;

pub const MANIFEST: &str = "manifest.json";
/// Files that depend only on the space and hardware settings.
pub const TABLE_FILES: [&str; 3] = ["perf_table.csv", "architectures.json", "accelerators.json"];

/// Writes `bytes` to a temp file in the target directory, then renames it
/// over `path`, so readers never see a torn file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot write into {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot move output into place at {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Serializes rows with a header into CSV bytes.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub engine_version: String,
    pub config_hash: String,
    pub table_fingerprint: String,
    pub config: ExperimentConfig,
    /// Relative path to SHA-256 of every file the bundle holds.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn path(out: &Path) -> PathBuf {
        out.join(MANIFEST)
    }

    pub fn read(out: &Path) -> Result<Option<Manifest>> {
        let path = Self::path(out);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        Ok(Some(serde_json::from_str(&text).with_context(|| format!("corrupt manifest {}", path.display()))?))
    }

    /// Records `files` in the manifest of `out`. A manifest from a different
    /// config is replaced; only the table files survive, and only when the
    /// table settings match.
    pub fn record(out: &Path, config: &ExperimentConfig, files: &[&str]) -> Result<()> {
        let mut manifest = match Self::read(out)? {
            Some(m) if m.config_hash == config.hash() => m,
            previous => {
                let mut kept = BTreeMap::new();
                if let Some(prev) = previous.filter(|p| p.table_fingerprint == config.table_fingerprint()) {
                    kept = prev.files.into_iter().filter(|(f, _)| TABLE_FILES.contains(&f.as_str())).collect();
                }
                Manifest {
                    engine_version: env!("CARGO_PKG_VERSION").to_string(),
                    config_hash: config.hash(),
                    table_fingerprint: config.table_fingerprint(),
                    config: config.clone(),
                    files: kept,
                }
            }
        };
        for f in files {
            manifest.files.insert(f.to_string(), sha256_file(&out.join(f))?);
        }
        write_json(&Self::path(out), &manifest)
    }
}
