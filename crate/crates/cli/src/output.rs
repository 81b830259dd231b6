//! Bit-exact output: CSV series, raw snapshots with sidecars, and the manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bequation::diagnostics::DiagnosticSeries;
use bequation::{GridSpec, VectorField};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// 17 significant digits, enough to round-trip every double.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Tracks every file written under one output directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Write `bytes` to `relative` and record its checksum.
    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let mut file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        file.write_all(bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry {
            path: relative.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// CSV with a header row; `time` first.
    pub fn write_table(&mut self, relative: &str, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.write(relative, text.as_bytes())
    }

    /// Series sharing one time axis, one column per series.
    pub fn write_series(&mut self, relative: &str, series: &[DiagnosticSeries]) -> CliResult<()> {
        let mut header = vec!["time".to_string()];
        header.extend(series.iter().map(|s| s.name.clone()));
        let times = series.first().map(|s| s.times.clone()).unwrap_or_default();
        let rows: Vec<Vec<f64>> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut row = vec![t];
                row.extend(series.iter().map(|s| s.values[i]));
                row
            })
            .collect();
        self.write_table(relative, &header, &rows)
    }

    /// `<stem>.bin` (little-endian f64, component-major, each component in
    /// row-major order with axis 0 slowest) plus `<stem>.json`.
    pub fn write_snapshot(&mut self, stem: &str, field_name: &str, time: f64, field: &VectorField) -> CliResult<()> {
        let mut bytes = Vec::with_capacity(field.flat_values().len() * 8);
        for v in field.flat_values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        self.write(&format!("{stem}.bin"), &bytes)?;
        let spec = field.grid().spec();
        let sidecar = Sidecar {
            grid: GridEcho::of(spec),
            time,
            field: field_name,
            components: field.dim(),
            dtype: "f64-le",
            layout: "component-major; row-major per component, axis 0 slowest",
        };
        let json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
        self.write(&format!("{stem}.json"), &json)
    }

    /// Write `manifest.json`, which lists every other file.
    pub fn finish(self, manifest: ManifestHeader) -> CliResult<PathBuf> {
        let manifest = Manifest { header: manifest, files: self.files };
        let path = self.root.join("manifest.json");
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct GridEcho {
    dim: usize,
    points: Vec<usize>,
    lengths: Vec<f64>,
}

impl GridEcho {
    fn of(spec: &GridSpec) -> Self {
        Self { dim: spec.dim(), points: spec.points().to_vec(), lengths: spec.lengths().to_vec() }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    grid: GridEcho,
    time: f64,
    field: &'a str,
    components: usize,
    dtype: &'a str,
    layout: &'a str,
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestHeader {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub started: String,
    pub finished: String,
    /// Termination per formulation, e.g. `{"eulerian": "completed"}`.
    pub termination: serde_json::Value,
}

#[derive(Serialize)]
struct Manifest {
    #[serde(flatten)]
    header: ManifestHeader,
    files: Vec<FileEntry>,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
