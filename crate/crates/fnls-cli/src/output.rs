//! Deterministic run artifacts: JSON, CSV, field dumps, plot scripts and the manifest.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Floats carry 17 significant digits; object keys are sorted; NaN and ±∞ become null.
pub fn to_json<T: Serialize>(value: &T) -> io::Result<String> {
    let v = serde_json::to_value(value).map_err(io::Error::other)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(depth + 1), Value::String((*k).clone()));
                write_value(&map[*k], depth + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

/// CSV cell: 17 significant digits, empty for non-finite values.
pub fn csv_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Git blob hash: sha256 of `blob <len>\0<content>`.
pub fn blob_sha256(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Collects files written into one run directory and seals them with a manifest.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl RunDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), entries: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, content: &[u8]) -> io::Result<()> {
        fs::write(self.root.join(name), content)?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ManifestEntry { path: name.to_string(), bytes: content.len(), sha256: blob_sha256(content) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let text = to_json(value)?;
        self.write(name, text.as_bytes())
    }

    /// Writes manifest.json listing every artifact (sorted by path).
    pub fn finish(mut self, experiment: &str) -> io::Result<Vec<ManifestEntry>> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        #[derive(Serialize)]
        struct Manifest<'a> {
            experiment: &'a str,
            hash: &'static str,
            files: &'a [ManifestEntry],
        }
        let text = to_json(&Manifest { experiment, hash: "sha256 of \"blob <len>\\0\" + content", files: &self.entries })?;
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(self.entries)
    }
}

/// gnuplot script for columns `x` against each of `ys` in a CSV with a header row.
pub fn gnuplot_script(csv_name: &str, png_name: &str, title: &str, x: usize, ys: &[(usize, &str)], logscale: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{png_name}'");
    let _ = writeln!(s, "set title '{title}'");
    if !logscale.is_empty() {
        let _ = writeln!(s, "set logscale {logscale}");
    }
    let plots: Vec<String> = ys
        .iter()
        .map(|(col, label)| format!("'{csv_name}' using {x}:{col} with linespoints title '{label}'"))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}
