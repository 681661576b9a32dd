//! Data files and the run manifest.
//!
//! CSV files start with a block of `#` comment lines (units, model tags and
//! the hash of the resolved configuration) followed by a single header row.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use attoscatter_core::{GreenPrefactor, Spectrum};
use serde::Serialize;

use crate::acceptance::CriterionResult;
use crate::cache::{sha256_hex, write_atomic};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CacheEvent {
    pub kind: String,
    pub key: String,
    pub hit: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub step: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Manifest {
    pub software_version: String,
    pub mode: String,
    pub config_sha256: String,
    pub config: Option<crate::RunConfig>,
    pub prefactor: Option<GreenPrefactor>,
    /// Eigen-residual of each candidate prefactor at the probe momentum.
    pub prefactor_residuals: Vec<(GreenPrefactor, f64)>,
    pub cache: Vec<CacheEvent>,
    pub timings: Vec<Timing>,
    pub warnings: Vec<String>,
    pub records: serde_json::Map<String, serde_json::Value>,
    pub acceptance: Vec<CriterionResult>,
    pub files: Vec<FileEntry>,
    pub failure: Option<String>,
}

pub struct OutputDir {
    dir: PathBuf,
    config_sha256: String,
}

impl OutputDir {
    pub fn new(dir: impl Into<PathBuf>, config_sha256: String) -> Self {
        Self {
            dir: dir.into(),
            config_sha256,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` and returns its manifest entry.
    pub fn write_csv(
        &self,
        name: &str,
        comments: &[String],
        header: &str,
        rows: impl IntoIterator<Item = String>,
    ) -> Result<FileEntry, CliError> {
        let mut text = String::new();
        writeln!(text, "# attoscatter {}", env!("CARGO_PKG_VERSION")).unwrap();
        for c in comments {
            writeln!(text, "# {c}").unwrap();
        }
        writeln!(text, "# config sha256: {}", self.config_sha256).unwrap();
        writeln!(text, "{header}").unwrap();
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<FileEntry, CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        Ok(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        })
    }
}

/// `0.005` style label used in file names.
pub fn f0_label(f0: f64) -> String {
    format!("{f0}")
}

pub fn spectrum_file_name(spectrum: &Spectrum) -> String {
    format!("spectrum_{}_f0={}.csv", spectrum.model, f0_label(spectrum.f0))
}

/// Spectrum rows with `lo <= p <= hi`.
pub fn write_spectrum(
    out: &OutputDir,
    name: &str,
    spectrum: &Spectrum,
    range: [f64; 2],
    note: &str,
) -> Result<FileEntry, CliError> {
    let comments = vec![
        format!("model: {}", spectrum.model),
        format!("f0: {} a.u.", spectrum.f0),
        "p: momentum [a.u.]; density: |<p|psi>|^2 [1/a.u.], integrating to the norm with weight dp".into(),
        note.to_string(),
    ];
    let rows = spectrum
        .momenta
        .iter()
        .zip(&spectrum.density)
        .filter(|(p, _)| **p >= range[0] && **p <= range[1])
        .map(|(p, d)| format!("{p},{d:e}"));
    out.write_csv(name, &comments, "p,density", rows)
}
