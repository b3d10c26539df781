//! Run manifests written next to every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::io::{to_json_pretty, write_file};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Command line as invoked, program name excluded.
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Worker count used; outputs do not depend on it.
    pub workers: Option<usize>,
    pub versions: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

/// Collects outputs while a command runs and stamps the elapsed time.
pub struct ManifestBuilder {
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn start(subcommand: &str, args: Vec<String>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("medqsl".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert(
            "medqsl-core".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        ManifestBuilder {
            started: Instant::now(),
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                args,
                config: serde_json::Value::Null,
                seed: None,
                workers: None,
                versions,
                outputs: Vec::new(),
                wall_clock_seconds: 0.0,
            },
        }
    }

    pub fn config(&mut self, config: serde_json::Value) -> &mut Self {
        self.manifest.config = config;
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.manifest.seed = Some(seed);
        self
    }

    pub fn workers(&mut self, workers: Option<usize>) -> &mut Self {
        self.manifest.workers = workers;
        self
    }

    /// Writes `contents` to `path` and records it.
    pub fn output(&mut self, path: &Path, contents: &str) -> anyhow::Result<()> {
        write_file(path, contents)?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Writes the manifest to `path` and returns it.
    pub fn finish(mut self, path: &Path) -> anyhow::Result<RunManifest> {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        write_file(path, &to_json_pretty(&self.manifest)?)?;
        Ok(self.manifest)
    }
}

/// `<file>.manifest.json` next to a single output file.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}
