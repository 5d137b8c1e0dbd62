//! CLI subcommand implementations.

pub mod analyze;
pub mod ingest;
pub mod probe;
pub mod report;
pub mod synth;

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Run metadata sidecar. This is the one place timestamps and timings
/// live; it stays outside the report-bundle manifest so bundles compare
/// byte-for-byte across reruns.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunMeta {
    #[serde(default)]
    pub commands: Vec<CommandMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandMeta {
    pub command: String,
    pub started_unix: u64,
    pub duration_ms: u64,
    pub seed: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub cache: Option<CacheStats>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub backend_calls: u64,
    pub hit_rate: f64,
}

impl RunMeta {
    pub fn load(path: &std::path::Path) -> Self {
        std::fs::read_to_string(path)
            .ok()
            .and_then(|text| serde_json::from_str(&text).ok())
            .unwrap_or_default()
    }

    pub fn append(path: &std::path::Path, entry: CommandMeta) -> Result<(), CliError> {
        let mut meta = Self::load(path);
        meta.commands.push(entry);
        let mut json = serde_json::to_string_pretty(&meta)
            .map_err(|e| CliError::Validation(format!("run metadata: {e}")))?;
        json.push('\n');
        std::fs::write(path, json)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// JSON report writer with a stable layout and trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &std::path::Path) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("report serialization: {e}")))?;
    json.push('\n');
    std::fs::write(path, json)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}
