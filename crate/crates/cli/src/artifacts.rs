// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Output directory: deterministic JSON and CSV files plus a manifest that
//! records hashes, timings and the effective configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use jcpulse::linalg::CMatrix;

use crate::error::CliError;

/// One plotted point; columns are stable across commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub x: f64,
    pub y: f64,
    pub series: String,
    pub seed: u64,
}

/// Complex matrix as separate real and imaginary row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&jcpulse::linalg::C64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

const TIMING_KEYS: [&str; 2] = ["wall_time", "wall_time_s"];

/// Remove timing fields so repeated runs produce identical bytes.
fn strip_timings(v: &mut Value, at: &str, out: &mut BTreeMap<String, f64>) {
    match v {
        Value::Object(map) => {
            for key in TIMING_KEYS {
                if let Some(t) = map.remove(key) {
                    out.insert(format!("{at}/{key}"), t.as_f64().unwrap_or(f64::NAN));
                }
            }
            for (k, child) in map.iter_mut() {
                strip_timings(child, &format!("{at}/{k}"), out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter_mut().enumerate() {
                strip_timings(child, &format!("{at}/{i}"), out);
            }
        }
        _ => {}
    }
}

pub struct Artifacts {
    dir: PathBuf,
    files: BTreeMap<String, String>,
    timings: BTreeMap<String, f64>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
            timings: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Pretty JSON with timing fields moved to the manifest.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::Output(e.to_string()))?;
        strip_timings(&mut v, name, &mut self.timings);
        let mut text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn csv(&mut self, name: &str, rows: &[CsvRow]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if rows.is_empty() {
            w.write_record(["x", "y", "series", "seed"]).map_err(|e| CliError::Output(e.to_string()))?;
        }
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        self.write(name, &bytes)
    }

    /// Hash of a file already written in this run.
    pub fn sha256_of(&self, name: &str) -> Option<String> {
        self.files.get(name).cloned()
    }

    /// Write `config.json` (the effective configuration, re-runnable as is) and
    /// `manifest.json`.
    pub fn finish(mut self, info: ManifestInfo) -> Result<(), CliError> {
        self.json("config.json", &info.config)?;
        let manifest = Manifest {
            tool: "jcpulse",
            version: env!("CARGO_PKG_VERSION"),
            command: info.command,
            config_source: info.config_source,
            config_sha256: sha256_hex(info.config.to_string().as_bytes()),
            seed: info.seed,
            jobs: info.jobs,
            status: info.status,
            cache: info.cache,
            wall_time_s: info.wall_time_s,
            timings: std::mem::take(&mut self.timings),
            files: std::mem::take(&mut self.files),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }
}

pub struct ManifestInfo {
    pub command: String,
    pub config_source: String,
    pub config: Value,
    pub seed: u64,
    pub jobs: usize,
    pub status: String,
    pub cache: Option<String>,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    config_source: String,
    config_sha256: String,
    seed: u64,
    jobs: usize,
    status: String,
    cache: Option<String>,
    wall_time_s: f64,
    timings: BTreeMap<String, f64>,
    files: BTreeMap<String, String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timings_are_stripped_recursively() {
        let mut v = serde_json::json!({"a": {"wall_time_s": 1.5, "x": 1}, "runs": [{"wall_time": 2.0}]});
        let mut t = BTreeMap::new();
        strip_timings(&mut v, "r", &mut t);
        assert_eq!(v, serde_json::json!({"a": {"x": 1}, "runs": [{}]}));
        assert_eq!(t.len(), 2);
        assert_eq!(t["r/runs/0/wall_time"], 2.0);
    }
}
