//! On-disk cache for bound states, dipole tables and propagation results.
//!
//! Every entry is one file: a header line
//! `# attoscatter-cache kind=<kind> sha256=<hex>` followed by the payload,
//! whose checksum the header records. Entries are written to a temporary
//! file and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the JSON form of `value`, tagged with the package version.
pub fn key_of(kind: &str, value: &impl Serialize) -> String {
    let json = serde_json::to_string(value).expect("cache key serializes");
    let tagged = format!("{kind}\n{}\n{json}", env!("CARGO_PKG_VERSION"));
    sha256_hex(tagged.as_bytes())[..20].to_string()
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, kind: &str, key: &str) -> PathBuf {
        self.dir.join(format!("{kind}_{key}.cache"))
    }

    /// The payload stored under `(kind, key)`, if any. A present but
    /// damaged entry is an error, not a miss.
    pub fn load(&self, kind: &str, key: &str) -> Result<Option<Vec<u8>>, CliError> {
        let path = self.path(kind, key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |m: &str| CliError::Cache(format!("{}: {m}", path.display()));
        let split = bytes
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| corrupt("missing header"))?;
        let header = std::str::from_utf8(&bytes[..split]).map_err(|_| corrupt("bad header"))?;
        let payload = &bytes[split + 1..];
        let expected_kind = format!("kind={kind}");
        let mut fields = header.split_whitespace();
        if fields.next() != Some("#") || fields.next() != Some("attoscatter-cache") {
            return Err(corrupt("bad header"));
        }
        if fields.next() != Some(expected_kind.as_str()) {
            return Err(corrupt("wrong entry kind"));
        }
        let sum = fields
            .next()
            .and_then(|f| f.strip_prefix("sha256="))
            .ok_or_else(|| corrupt("missing checksum"))?;
        if sum != sha256_hex(payload) {
            return Err(corrupt("checksum mismatch"));
        }
        Ok(Some(payload.to_vec()))
    }

    pub fn store(&self, kind: &str, key: &str, payload: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(kind, key);
        let mut bytes = format!("# attoscatter-cache kind={kind} sha256={}\n", sha256_hex(payload)).into_bytes();
        bytes.extend_from_slice(payload);
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_miss_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        assert!(cache.load("bound", "k").unwrap().is_none());
        cache.store("bound", "k", b"1,2,3\n").unwrap();
        assert_eq!(cache.load("bound", "k").unwrap().unwrap(), b"1,2,3\n");
        let path = cache.path("bound", "k");
        let mut bytes = fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n - 2] = b'4';
        fs::write(&path, bytes).unwrap();
        assert!(matches!(cache.load("bound", "k"), Err(CliError::Cache(_))));
    }

    #[test]
    fn keys_depend_on_content() {
        assert_eq!(key_of("a", &(1.0, 2)), key_of("a", &(1.0, 2)));
        assert_ne!(key_of("a", &(1.0, 2)), key_of("a", &(1.0, 3)));
        assert_ne!(key_of("a", &(1.0, 2)), key_of("b", &(1.0, 2)));
    }
}
