//! The cache directory: persisted oracle tables guarded by a lock file.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use gwrel::memo::{CacheKey, MemoTable};
use gwrel::p1_gw::P1Oracle;
use gwrel::point_gw::PointOracle;

pub const POINT_FILE: &str = "point.cache";
pub const P1_FILE: &str = "p1.cache";
const LOCK_FILE: &str = ".lock";

/// Exclusive hold on a cache directory; released on drop.
pub struct Store {
    dir: PathBuf,
    pub point: Arc<PointOracle>,
    pub p1: Arc<P1Oracle>,
}

impl Store {
    pub fn open(dir: &Path) -> Result<Store> {
        fs::create_dir_all(dir).with_context(|| format!("creating cache directory {}", dir.display()))?;
        let lock = dir.join(LOCK_FILE);
        let mut f = match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => bail!(
                "cache directory {} is in use (lock file {} exists; remove it if no gwrel process is running)",
                dir.display(),
                lock.display()
            ),
            Err(e) => return Err(e).with_context(|| format!("creating {}", lock.display())),
        };
        writeln!(f, "{}", std::process::id()).with_context(|| format!("writing {}", lock.display()))?;
        let store = Store { dir: dir.to_path_buf(), point: Arc::new(PointOracle::new()), p1: Arc::new(P1Oracle::new()) };
        store.point.cache().load(&store.dir.join(POINT_FILE))?;
        store.p1.cache().load(&store.dir.join(P1_FILE))?;
        Ok(store)
    }

    pub fn save(&self) -> Result<()> {
        self.point.cache().save(&self.dir.join(POINT_FILE))?;
        self.p1.cache().save(&self.dir.join(P1_FILE))?;
        Ok(())
    }

    pub fn stats(&self) -> [(&'static str, usize); 2] {
        [(POINT_FILE, self.point.cache().len()), (P1_FILE, self.p1.cache().len())]
    }

    /// Deletes both cache files and empties the in-memory tables.
    pub fn clear(&self) -> Result<()> {
        for name in [POINT_FILE, P1_FILE] {
            let path = self.dir.join(name);
            match fs::remove_file(&path) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e).with_context(|| format!("removing {}", path.display())),
            }
        }
        self.point.cache().clear();
        self.p1.cache().clear();
        Ok(())
    }

    /// Canonical text of both tables, point entries first.
    pub fn export(&self) -> String {
        fn dump<K: CacheKey>(t: &MemoTable<K>, out: &mut Vec<u8>) {
            t.write_to(&mut *out).expect("writing to memory");
        }
        let mut out = Vec::new();
        dump(self.point.cache(), &mut out);
        dump(self.p1.cache(), &mut out);
        String::from_utf8(out).expect("cache text is UTF-8")
    }
}

impl Drop for Store {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.dir.join(LOCK_FILE));
    }
}
