use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::RunError;
use crate::geometry::CORRECTOR_TOL;
use crate::mc::IpmOptions;
use crate::saddle::{OVERFLOW_GUARD, ROOT_TOL};

pub const SCHEMA_VERSION: u32 = 1;

/// Numerical tolerances in force for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub root_tol: f64,
    pub corrector_tol: f64,
    pub overflow_guard: f64,
    pub ipm_gap_tol: f64,
    pub ipm_feas_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let ipm = IpmOptions::default();
        Self {
            root_tol: ROOT_TOL,
            corrector_tol: CORRECTOR_TOL,
            overflow_guard: OVERFLOW_GUARD,
            ipm_gap_tol: ipm.tol,
            ipm_feas_tol: ipm.feas_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the directory holding the manifest.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    pub rows: usize,
    /// `complete`, or the truncation reason.
    pub status: String,
    /// Quantities computed from the data, such as a transition width.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub derived: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: Value,
    pub tolerances: Tolerances,
    pub files: Vec<FileEntry>,
    /// Paths of files whose curve is truncated.
    pub truncated: Vec<String>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, parameters: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters,
            tolerances: Tolerances::default(),
            files: Vec::new(),
            truncated: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Hash `dir/path` and record it. `status` is the truncation reason, if
    /// any.
    pub fn add_file(&mut self, dir: &Path, path: &str, rows: usize, status: Option<&str>, derived: Value) -> Result<(), RunError> {
        let bytes = fs::read(dir.join(path)).map_err(|e| io_error(&dir.join(path), e))?;
        if status.is_some() {
            self.truncated.push(path.into());
        }
        self.files.push(FileEntry {
            path: path.into(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
            rows,
            status: status.unwrap_or("complete").into(),
            derived,
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| io_error(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&text).map_err(|e| RunError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    /// Files whose content no longer matches the recorded hash.
    pub fn stale_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| fs::read(dir.join(&f.path)).map(|b| sha256_hex(&b) != f.sha256).unwrap_or(true))
            .map(|f| f.path.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io { path: path.display().to_string(), message: e.to_string() }
}
