//! Command-line driver: configuration, caching, the scan pipelines and
//! the acceptance harness.

pub mod acceptance;
pub mod cache;
pub mod config;
pub mod output;
pub mod pipeline;

use std::fmt;

pub use acceptance::{evaluate, CriterionResult};
pub use config::{default_f0_sweep, RunConfig};
pub use pipeline::Session;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(#[from] attoscatter_core::Error),

    #[error("cache corrupted: {0}")]
    Cache(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Cache(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    BoundStates,
    DipoleTable,
    TdseScan,
    CvaScan,
    ClassicalScan,
    ParcelAnalysis,
    Compare,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::BoundStates => "bound-states",
            Mode::DipoleTable => "dipole-table",
            Mode::TdseScan => "tdse-scan",
            Mode::CvaScan => "cva-scan",
            Mode::ClassicalScan => "classical-scan",
            Mode::ParcelAnalysis => "parcel-analysis",
            Mode::Compare => "compare",
        };
        f.write_str(s)
    }
}

/// Runs one mode to completion and writes the manifest, also on failure.
pub fn run(mode: Mode, config: RunConfig) -> Result<Session, CliError> {
    let mut session = Session::new(config)?;
    let result = session.run_mode(mode);
    if let Err(e) = &result {
        session.manifest.failure = Some(e.to_string());
    }
    session.write_manifest(mode)?;
    result.map(|_| session)
}
