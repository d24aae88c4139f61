use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Provenance record written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_hash: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub planarprob: &'static str,
    pub cli: &'static str,
}

/// SHA-256 of the config serialized with sorted keys and no whitespace, so
/// the hash ignores key order and formatting.
pub fn config_hash(config: &Value) -> String {
    // serde_json's default map is ordered by key
    let canonical = serde_json::to_string(config).expect("JSON values serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(config: Value, seed: Option<u64>, started: DateTime<Utc>, outputs: Vec<PathBuf>) -> Self {
        Self {
            command_line: std::env::args().collect(),
            config_hash: config_hash(&config),
            config,
            seed,
            versions: Versions {
                planarprob: planarprob::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
            started: stamp(started),
            finished: stamp(Utc::now()),
            outputs,
        }
    }

    /// `<output>.manifest.json` beside the first output.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    pub fn write_beside(&self, output: &Path) -> std::io::Result<PathBuf> {
        let path = Self::path_for(output);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"n": 8, "mode": "gaussian-poly", "k": 1}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"k":1,"mode":"gaussian-poly","n":8}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let c: Value = serde_json::from_str(r#"{"k":2,"mode":"gaussian-poly","n":8}"#).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn manifest_path() {
        assert_eq!(
            RunManifest::path_for(Path::new("out/results.csv")),
            PathBuf::from("out/results.csv.manifest.json")
        );
    }
}
