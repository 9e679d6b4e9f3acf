use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

/// Everything needed to reproduce a run. Two runs with equal manifests,
/// apart from the timestamp, produce byte-identical primary output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// The parsed command-line options, output paths excluded.
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    /// `sha256:<hex>` of the input file as read.
    pub input_digest: Option<String>,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, seed: Option<u64>, input_digest: Option<String>) -> Self {
        let timestamp = OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default();
        Self {
            command: command.to_string(),
            parameters,
            seed,
            input_digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }
}

pub fn sha256_digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}
