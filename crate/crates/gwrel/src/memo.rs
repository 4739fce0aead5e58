//! Thread-safe memo tables with a line-oriented text persistence format.

use std::collections::HashMap;
use std::fs;
use std::hash::Hash;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use thiserror::Error;

use crate::exactnum::Rational;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
}

/// A key with a canonical text form. `render` output never contains the
/// final `;` separator that precedes the value.
pub trait CacheKey: Clone + Eq + Hash + Ord + Send + Sync {
    fn render(&self) -> String;
    fn parse(text: &str) -> Result<Self, String>;
}

/// Concurrent readers, one writer at a time. Values are never replaced once
/// inserted.
pub struct MemoTable<K> {
    map: RwLock<HashMap<K, Rational>>,
}

impl<K: CacheKey> Default for MemoTable<K> {
    fn default() -> Self {
        MemoTable { map: RwLock::new(HashMap::new()) }
    }
}

impl<K: CacheKey> MemoTable<K> {
    pub fn get(&self, key: &K) -> Option<Rational> {
        self.map.read().unwrap().get(key).cloned()
    }

    pub fn insert(&self, key: K, value: Rational) {
        self.map.write().unwrap().entry(key).or_insert(value);
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.write().unwrap().clear();
    }

    /// All entries in key order.
    pub fn entries(&self) -> Vec<(K, Rational)> {
        let mut out: Vec<_> = self.map.read().unwrap().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, v) in self.entries() {
            writeln!(w, "{};{}", k.render(), v)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CacheError> {
        let io_err = |source| CacheError::Io { path: path.to_path_buf(), source };
        let tmp = path.with_extension("tmp");
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(io_err)?;
        fs::write(&tmp, buf).map_err(io_err)?;
        fs::rename(&tmp, path).map_err(io_err)
    }

    /// Parses cache text, returning entries without inserting them.
    pub fn parse_text(path: &Path, text: &str) -> Result<Vec<(K, Rational)>, CacheError> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| CacheError::Malformed { path: path.to_path_buf(), line: i + 1, message };
            let (key, value) = line.rsplit_once(';').ok_or_else(|| malformed("missing ';'".into()))?;
            let key = K::parse(key).map_err(malformed)?;
            let value: Rational = value.parse().map_err(|e: crate::exactnum::ParseRationalError| malformed(e.to_string()))?;
            out.push((key, value));
        }
        Ok(out)
    }

    /// Loads entries from `path`; a missing file is an empty cache.
    pub fn load(&self, path: &Path) -> Result<usize, CacheError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(0),
            Err(source) => return Err(CacheError::Io { path: path.to_path_buf(), source }),
        };
        let entries = Self::parse_text(path, &text)?;
        let n = entries.len();
        let mut map = self.map.write().unwrap();
        for (k, v) in entries {
            map.entry(k).or_insert(v);
        }
        Ok(n)
    }
}

pub(crate) fn parse_list<T, F>(text: &str, item: F) -> Result<Vec<T>, String>
where
    F: Fn(&str) -> Result<T, String>,
{
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|s| item(s.trim())).collect()
}
