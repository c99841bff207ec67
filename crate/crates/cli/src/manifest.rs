//! Run manifests: what produced an output directory.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use predproto_core::prototypes::PrototypeExtractor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
    /// Every seed the run consumed, by role.
    pub seeds: BTreeMap<String, u64>,
    /// Named inputs (data, config, checkpoint paths).
    pub inputs: BTreeMap<String, String>,
    /// The effective configuration, after defaults and overrides.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<PrototypeExtractor>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            config,
            extractor: None,
            outputs: Vec::new(),
        }
    }

    pub fn seed(mut self, role: &str, seed: u64) -> Self {
        self.seeds.insert(role.to_string(), seed);
        self
    }

    pub fn input(mut self, name: &str, value: impl ToString) -> Self {
        self.inputs.insert(name.to_string(), value.to_string());
        self
    }
}
