use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Environment variables that override built-in defaults.
pub const ENV_DT: &str = "FIFONET_DT";
pub const ENV_MARGIN_TOL: &str = "FIFONET_MARGIN_TOL";
pub const ENV_SAMPLE_TOL: &str = "FIFONET_SAMPLE_TOL";
pub const ENV_ORBIT_TOL: &str = "FIFONET_ORBIT_TOL";

/// Provenance of one command run, embedded in or written next to every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub network_sha256: Option<String>,
    pub version: String,
    pub seed: Option<u64>,
    /// Environment overrides that were in effect.
    pub env: BTreeMap<String, String>,
    pub duration_s: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().collect(),
            network_sha256: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            env: BTreeMap::new(),
            duration_s: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn hash_network(&mut self, bytes: &[u8]) {
        self.network_sha256 = Some(hex::encode(Sha256::digest(bytes)));
    }

    /// Resolves a default: explicit flag, then environment variable, then
    /// the built-in value. Records the variable when it is used.
    pub fn resolve(&mut self, flag: Option<f64>, var: &str, builtin: f64) -> anyhow::Result<f64> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match std::env::var(var) {
            Ok(text) => {
                let v: f64 = text
                    .trim()
                    .parse()
                    .map_err(|_| anyhow::anyhow!("{var}={text} is not a number"))?;
                self.env.insert(var.to_string(), text);
                Ok(v)
            }
            Err(_) => Ok(builtin),
        }
    }

    pub fn finish(&mut self) -> &Self {
        if let Some(t) = self.started {
            self.duration_s = t.elapsed().as_secs_f64();
        }
        self
    }

    /// Writes `<path>.manifest.json` next to a CSV artifact.
    pub fn write_sidecar(&mut self, artifact: &Path) -> std::io::Result<()> {
        let mut name = artifact.as_os_str().to_owned();
        name.push(".manifest.json");
        let text = serde_json::to_string_pretty(self.finish()).expect("manifest serializes");
        std::fs::write(name, text + "\n")
    }
}
