//! Content hashing, atomic writes and the on-disk result cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "TRIMERLAB_CACHE";
pub const DEFAULT_CACHE_DIR: &str = ".trimerlab-cache";

/// SHA-256 of the canonical JSON encoding of `value`, hex encoded.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable inputs");
    hex::encode(Sha256::digest(&bytes))
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A content-addressed directory: each entry is a folder named by the hash
/// of the inputs that produced it.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// `$TRIMERLAB_CACHE`, or `./.trimerlab-cache`.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_CACHE_DIR.into()))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry(&self, kind: &str, hash: &str) -> PathBuf {
        self.root.join(kind).join(hash)
    }

    /// Path of `file` inside the entry if the entry is complete.
    pub fn lookup(&self, kind: &str, hash: &str, file: &str) -> Option<PathBuf> {
        let p = self.entry(kind, hash).join(file);
        p.is_file().then_some(p)
    }

    pub fn store(&self, kind: &str, hash: &str, file: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.entry(kind, hash).join(file);
        write_atomic(&p, bytes)?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = content_hash(&serde_json::json!({"x": 1.0, "y": [1, 2]}));
        let b = content_hash(&serde_json::json!({"x": 1.0, "y": [1, 2]}));
        let c = content_hash(&serde_json::json!({"x": 1.0000001, "y": [1, 2]}));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        assert!(cache.lookup("t", "abc", "f.csv").is_none());
        cache.store("t", "abc", "f.csv", b"1,2\n").unwrap();
        let p = cache.lookup("t", "abc", "f.csv").unwrap();
        assert_eq!(fs::read(p).unwrap(), b"1,2\n");
    }
}
