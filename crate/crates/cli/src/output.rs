//! Output directory: CSV series, snapshot, plot script and the JSON summary
//! whose manifest hashes every other file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_SCRIPT: &str = "plot.py";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub struct OutputDir {
    root: PathBuf,
    manifest: Vec<ManifestEntry>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(Self { root: root.to_path_buf(), manifest: vec![] })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        self.manifest.push(ManifestEntry { path: rel.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// CSV with a header row; floats use the shortest round-trip form.
    pub fn write_csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| io(&self.root.join(rel), e);
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| io(&self.root.join(rel), e))?;
        self.write_bytes(rel, &bytes)
    }

    /// Writes the plotting script for the CSVs emitted so far.
    pub fn write_plot_script(&mut self) -> Result<(), Failure> {
        let csvs: Vec<String> =
            self.manifest.iter().filter(|m| m.path.ends_with(".csv")).map(|m| format!("    {:?},", m.path)).collect();
        let script = PLOT_TEMPLATE.replace("{{FILES}}", &csvs.join("\n"));
        self.write_bytes(PLOT_SCRIPT, script.as_bytes())
    }

    /// Writes `summary.json` with a `files` manifest appended to `summary`.
    pub fn finish(self, summary: impl Serialize) -> Result<PathBuf, Failure> {
        let path = self.root.join(SUMMARY_FILE);
        let mut value = serde_json::to_value(summary).map_err(|e| io(&path, e))?;
        let obj: &mut Map<String, Value> =
            value.as_object_mut().ok_or_else(|| Failure::Io("summary must be a JSON object".into()))?;
        obj.insert("files".into(), serde_json::to_value(&self.manifest).map_err(|e| io(&path, e))?);
        let mut text = serde_json::to_string_pretty(&value).map_err(|e| io(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io(&path, e))?;
        Ok(path)
    }
}

const PLOT_TEMPLATE: &str = r#"#!/usr/bin/env python3
"""Plots every CSV series next to this script into PNG files."""
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

FILES = [
{{FILES}}
]

HERE = os.path.dirname(os.path.abspath(__file__))

for rel in FILES:
    with open(os.path.join(HERE, rel), newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]
    if not data:
        continue
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in range(1, len(header)):
        ys = [r[col] for r in data]
        ax.plot([r[0] for r in data], ys, label=header[col])
        if header[col] in ("value", "residual") and all(y > 0 for y in ys):
            ax.set_yscale("log")
    ax.set_xlabel(header[0])
    ax.set_title(rel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(HERE, os.path.splitext(rel)[0] + ".png"), dpi=120)
    plt.close(fig)
"#;
