//! On-disk run cache keyed by config hash. The directory comes from
//! `ERGOLAB_CACHE_DIR`, falling back to `.ergolab-cache`.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use crate::error::LabResult;
use crate::run::RunReport;

pub const CACHE_ENV: &str = "ERGOLAB_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".ergolab-cache";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub hash: String,
    pub kind: String,
    pub bytes: u64,
}

/// Writes `bytes` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> LabResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_ENV).map_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR), PathBuf::from))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// A stored report, or `None` when absent or unreadable.
    pub fn get(&self, hash: &str) -> Option<RunReport> {
        let text = fs::read_to_string(self.path(hash)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, report: &RunReport) -> LabResult<()> {
        write_atomic(&self.path(&report.config_hash), &serde_json::to_vec_pretty(report)?)
    }

    pub fn ls(&self) -> LabResult<Vec<CacheEntry>> {
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for entry in rd {
            let path = entry?.path();
            let Some(hash) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            if path.extension().and_then(|s| s.to_str()) != Some("json") {
                continue;
            }
            let kind = self.get(hash).map_or_else(|| "?".to_string(), |r| r.kind);
            out.push(CacheEntry {
                hash: hash.to_string(),
                kind,
                bytes: fs::metadata(&path)?.len(),
            });
        }
        out.sort_by(|a, b| a.hash.cmp(&b.hash));
        Ok(out)
    }

    /// Removes every cached report; returns how many were removed.
    pub fn clear(&self) -> LabResult<usize> {
        let entries = self.ls()?;
        for e in &entries {
            fs::remove_file(self.path(&e.hash))?;
        }
        Ok(entries.len())
    }
}
