//! CSV snapshots, JSON reports and the content-hash manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::solver::SpatialGrid;
use crate::{Error, Result};

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros stripped, exponent form only below `1e-5` or at `10^digits` and above.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    strip_zeros(&format!("{:.*}", decimals, v)).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `u_t{time}_eps{epsilon}.csv`.
pub fn snapshot_file_name(time: f64, epsilon: f64) -> String {
    format!("u_t{time}_eps{epsilon}.csv")
}

/// Renders a grid function as `x,u` CSV (LF line endings).
pub fn snapshot_csv(grid: &SpatialGrid, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 32 + 4);
    out.push_str("x,u\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format_sig(grid.x(i), 12));
        out.push(',');
        out.push_str(&format_sig(*v, 12));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

/// Writes files under a root directory and remembers their hashes.
#[derive(Debug)]
pub struct ArtifactSink {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactSink {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self {
            root,
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `contents` at `relative` (forward-slash separated) and returns
    /// the relative path.
    pub fn write(&mut self, relative: &str, contents: &[u8]) -> Result<String> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(contents).map_err(|e| Error::io(&path, e))?;
        let digest = hex::encode(Sha256::digest(contents));
        self.entries.retain(|e| e.path != relative);
        self.entries.push(ManifestEntry {
            path: relative.to_string(),
            sha256: digest,
        });
        Ok(relative.to_string())
    }

    pub fn write_json<T: Serialize>(&mut self, relative: &str, value: &T) -> Result<String> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(relative, &text)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Writes `manifest.json` (entries sorted by path) and returns its path.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut text = serde_json::to_vec_pretty(&self.entries)?;
        text.push(b'\n');
        let path = self.root.join("manifest.json");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
