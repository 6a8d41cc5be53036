//! Matrix-element cache.
//!
//! In memory the cache is a map guarded by a read-write lock: lookups take
//! the read lock, inserts the write lock, so concurrent misses may compute
//! the same value twice but never leave a torn entry.
//!
//! On disk it is a UTF-8 text file:
//!
//! ```text
//! # rydtherm matrix-element cache
//! format_version = 1
//! data_version = <species data version>
//! <key>\t<value>\t<mesh hash>
//! ...
//! ```
//!
//! Values are written in Rust's shortest round-trip float notation so a
//! reload is bit-exact.  A file whose `data_version` differs from the
//! current species data is treated as stale and ignored; a record whose mesh
//! hash differs from the requester's is treated as a miss.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::RwLock;

use crate::error::{Error, Result};

const HEADER: &str = "# rydtherm matrix-element cache";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    value: f64,
    mesh_hash: u64,
}

#[derive(Debug)]
pub struct MatrixElementCache {
    data_version: String,
    map: RwLock<HashMap<String, Entry>>,
}

fn parse_hash(s: &str) -> Option<u64> {
    u64::from_str_radix(s, 16).ok()
}

fn hash_to_u64(h: &str) -> u64 {
    parse_hash(h).unwrap_or(0)
}

impl MatrixElementCache {
    pub fn new(data_version: &str) -> Self {
        Self { data_version: data_version.to_string(), map: RwLock::new(HashMap::new()) }
    }

    pub fn data_version(&self) -> &str {
        &self.data_version
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str, mesh_hash: &str) -> Option<f64> {
        let map = self.map.read().expect("cache lock poisoned");
        map.get(key).filter(|e| e.mesh_hash == hash_to_u64(mesh_hash)).map(|e| e.value)
    }

    pub fn insert(&self, key: String, value: f64, mesh_hash: &str) {
        let mut map = self.map.write().expect("cache lock poisoned");
        map.insert(key, Entry { value, mesh_hash: hash_to_u64(mesh_hash) });
    }

    /// Fetch or compute-and-store.
    pub fn get_or_insert_with<F: FnOnce() -> Result<f64>>(&self, key: String, mesh_hash: &str, f: F) -> Result<f64> {
        if let Some(v) = self.get(&key, mesh_hash) {
            return Ok(v);
        }
        let v = f()?;
        self.insert(key, v, mesh_hash);
        Ok(v)
    }

    /// Merge records from a cache file.  Returns the number of records read,
    /// or 0 if the file is missing or stale.
    pub fn load(&self, path: &Path) -> Result<usize> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(source) => return Err(Error::Io { path: path.to_path_buf(), source }),
        };
        let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l == HEADER => {}
            _ => return Err(perr(1, "missing cache header".into())),
        }
        let fv = lines.next().and_then(|(_, l)| l.strip_prefix("format_version = "));
        if fv.and_then(|v| v.parse::<u32>().ok()) != Some(FORMAT_VERSION) {
            return Ok(0);
        }
        let dv = lines.next().and_then(|(_, l)| l.strip_prefix("data_version = "));
        if dv != Some(self.data_version.as_str()) {
            return Ok(0);
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split('\t');
            let (Some(k), Some(v), Some(h), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(perr(i + 1, "expected three tab-separated fields".into()));
            };
            let value: f64 = v.parse().map_err(|_| perr(i + 1, format!("bad value `{v}`")))?;
            let hash = parse_hash(h).ok_or_else(|| perr(i + 1, format!("bad mesh hash `{h}`")))?;
            records.push((k.to_string(), Entry { value, mesh_hash: hash }));
        }
        let n = records.len();
        let mut map = self.map.write().expect("cache lock poisoned");
        map.extend(records);
        Ok(n)
    }

    /// Write all records, sorted by key, to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let map = self.map.read().expect("cache lock poisoned");
        let mut keys: Vec<&String> = map.keys().collect();
        keys.sort();
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str(&format!("format_version = {FORMAT_VERSION}\ndata_version = {}\n", self.data_version));
        for k in keys {
            let e = map[k];
            out.push_str(&format!("{k}\t{:e}\t{:016x}\n", e.value, e.mesh_hash));
        }
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(out.as_bytes()).map_err(io)?;
        drop(f);
        fs::rename(&tmp, path).map_err(io)
    }
}
