//! Run metadata written next to every output file.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

pub const TOOL_NAME: &str = "shortcut-lab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Flat record of everything that determines a run's output.
///
/// `params` holds the command-specific values; they are merged into the top
/// level when serialized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub preset: String,
    pub tool: String,
    pub version: String,
    pub timestamp_unix: u64,
    pub argv: Vec<String>,
    pub seed: u64,
    pub lambda: f64,
    pub tol: f64,
    pub tol_sign: f64,
    pub max_iter: usize,
    pub outputs: Vec<String>,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl RunManifest {
    pub fn now_unix() -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }

    pub fn to_json_pretty(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
