//! Config-driven experiment runner. Every run writes its artifacts plus a
//! `manifest.json` with content hashes and the outcome of each check.

pub mod config;
pub mod experiments;
pub mod fixtures;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, Format, Kind};
pub use experiments::Check;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field `{path}`: {source}")]
    Config { path: String, source: randspace::Error },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error(transparent)]
    Core(#[from] randspace::Error),
}

impl CliError {
    /// 2 for anything the user can fix in the config, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config { .. } | CliError::UnknownFixture(_) => 2,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub kind: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: &'static str,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<Artifact, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(Artifact { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() })
}

/// Validates, runs and writes every artifact into `config.out`. Check failures are
/// reported in the manifest, not as errors.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let validated = config.validate()?;
    let start = Instant::now();
    let outcome = randspace::par::with_workers(config.workers, || experiments::run_kind(config, &validated))?;
    let out: &PathBuf = &config.out;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;

    let mut artifacts = Vec::new();
    match config.format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&outcome.payload).expect("json values serialize");
            artifacts.push(write(out, &format!("{}.json", config.kind.as_str()), text.as_bytes())?);
        }
        Format::Csv => {
            for (name, table) in &outcome.tables {
                artifacts.push(write(out, name, table.as_bytes())?);
            }
        }
    }
    let manifest = RunManifest {
        kind: config.kind.as_str(),
        seed: config.seed,
        config_hash: sha256_hex(config.canonical_json().as_bytes()),
        tool_version: env!("CARGO_PKG_VERSION"),
        artifacts,
        checks: outcome.checks,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(out, "manifest.json", text.as_bytes())?;
    Ok(manifest)
}
