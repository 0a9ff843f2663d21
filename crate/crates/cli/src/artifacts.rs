//! Serialized run outputs. Certificates and traces are deterministic given
//! the run config; timestamps and wall time live only in the manifest.

use std::io::Write;
use std::path::Path;

use goldstein_core::{GoldsteinCertificate, SolveTrace};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::exit::{CliError, CliResult, ExitCode};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CERTIFICATE_SCHEMA: &str = "goldstein-certificate/1";
pub const TRACE_SCHEMA: &str = "goldstein-trace/1";
pub const MANIFEST_SCHEMA: &str = "goldstein-manifest/1";

pub const CERTIFICATE_FILE: &str = "certificate.json";
pub const TRACE_FILE: &str = "trace.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema: String,
    pub version: String,
    pub run: RunConfig,
    pub certificate: GoldsteinCertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub schema: String,
    pub version: String,
    pub run: RunConfig,
    pub outcome: ExitCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub trace: SolveTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub version: String,
    pub run: RunConfig,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub wall_time_s: f64,
    pub outcome: ExitCode,
    pub exit_code: i32,
    pub files: Vec<String>,
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::new(ExitCode::Internal, format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, on_parse: ExitCode) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::new(on_parse, format!("cannot parse {}: {e}", path.display())))
}
