//! On-disk cache of estimated best constants, keyed by (N, s, q, M, L).
//!
//! One record per line: `v1 N s q M L c_gns s_sob gns_converged sob_converged`, floats in
//! round-trip form. Unreadable lines are skipped; a stale format version is ignored.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

const VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheKey {
    pub n: usize,
    pub s: f64,
    pub q: f64,
    pub m: usize,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedConstants {
    pub c_gns: f64,
    pub s_sob: f64,
    pub gns_converged: bool,
    pub sob_converged: bool,
}

/// `FNLS_CACHE` if set, else `$HOME/.cache/fnls/constants-v1.txt`.
pub fn default_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("FNLS_CACHE") {
        return Some(PathBuf::from(p));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache/fnls/constants-v1.txt"))
}

#[derive(Debug)]
pub struct ConstantsCache {
    path: Option<PathBuf>,
    records: Vec<(CacheKey, CachedConstants)>,
}

fn parse_line(line: &str) -> Option<(CacheKey, CachedConstants)> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() != 10 || f[0] != VERSION {
        return None;
    }
    let key = CacheKey { n: f[1].parse().ok()?, s: f[2].parse().ok()?, q: f[3].parse().ok()?, m: f[4].parse().ok()?, l: f[5].parse().ok()? };
    let val = CachedConstants {
        c_gns: f[6].parse().ok()?,
        s_sob: f[7].parse().ok()?,
        gns_converged: f[8].parse().ok()?,
        sob_converged: f[9].parse().ok()?,
    };
    Some((key, val))
}

fn format_line(k: &CacheKey, v: &CachedConstants) -> String {
    format!(
        "{VERSION} {} {:?} {:?} {} {:?} {:?} {:?} {} {}\n",
        k.n, k.s, k.q, k.m, k.l, v.c_gns, v.s_sob, v.gns_converged, v.sob_converged
    )
}

impl ConstantsCache {
    /// Loads from `path`; a missing file is an empty cache.
    pub fn load(path: Option<&Path>) -> io::Result<Self> {
        let records = match path {
            Some(p) => match fs::read_to_string(p) {
                Ok(text) => text.lines().filter_map(parse_line).collect(),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
                Err(e) => return Err(e),
            },
            None => Vec::new(),
        };
        Ok(Self { path: path.map(Path::to_path_buf), records })
    }

    /// A cache that never touches disk.
    pub fn disabled() -> Self {
        Self { path: None, records: Vec::new() }
    }

    pub fn get(&self, key: &CacheKey) -> Option<CachedConstants> {
        self.records.iter().rev().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Records and persists (write to a sibling temp file, then rename).
    pub fn insert(&mut self, key: CacheKey, value: CachedConstants) -> io::Result<()> {
        self.records.retain(|(k, _)| *k != key);
        self.records.push((key, value));
        let Some(path) = &self.path else { return Ok(()) };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let text: String = self.records.iter().map(|(k, v)| format_line(k, v)).collect();
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)
    }
}
