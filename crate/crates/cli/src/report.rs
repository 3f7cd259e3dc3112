//! Run manifests, error categories and report output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mpkforge::MpkError;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Failure categories, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verify(String),
    Io(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<MpkError> for CliError {
    fn from(e: MpkError) -> Self {
        match e {
            MpkError::InvalidArgument(_) | MpkError::Parse { .. } => CliError::Usage(e.to_string()),
            MpkError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    /// Input path -> SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: impl Serialize, seed: Option<u64>) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
        RunManifest {
            subcommand: subcommand.to_string(),
            params: serde_json::to_value(params).expect("params serialize"),
            inputs: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp,
        }
    }

    pub fn hash_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(path.display().to_string(), hex);
        Ok(())
    }
}

/// Report body with its manifest under `manifest`.
pub fn with_manifest(manifest: &RunManifest, body: impl Serialize) -> serde_json::Value {
    let mut v = serde_json::to_value(body).expect("report serializes");
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("manifest".into(), serde_json::to_value(manifest).expect("manifest serializes"));
    }
    v
}

/// Writes pretty JSON to `path`, or stdout when `path` is `None`.
pub fn emit_json(value: &serde_json::Value, path: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json") + "\n";
    emit_text(&text, path)
}

pub fn emit_text(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
