//! Report directory handling and run manifests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use riomark_core::text::sha256_hex;
use serde::Serialize;

/// Provenance of one command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    /// Input role -> `{path, sha256}`.
    pub inputs: BTreeMap<String, InputDigest>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
    /// Written file (relative to the report directory) -> sha256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config: BTreeMap::new(),
            inputs: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn add_input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.inputs.insert(
            role.to_string(),
            InputDigest { path: path.display().to_string(), sha256: sha256_hex(bytes) },
        );
    }

    /// Digest over command, config, input contents, seed and version. The
    /// timestamp, input paths and output list are left out.
    pub fn digest(&self) -> String {
        let inputs: BTreeMap<&str, &str> = self.inputs.iter().map(|(k, v)| (k.as_str(), v.sha256.as_str())).collect();
        let stable = serde_json::json!({
            "command": self.command,
            "config": self.config,
            "inputs": inputs,
            "seed": self.seed,
            "tool_version": self.tool_version,
        });
        sha256_hex(stable.to_string().as_bytes())
    }
}

/// A report directory whose files are written atomically and recorded in
/// the manifest.
pub struct ReportDir {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl ReportDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_atomic(&path, bytes)?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    /// Serializes `value` with the manifest digest added under
    /// `manifest_digest`.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T, manifest_digest: &str) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("manifest_digest".into(), manifest_digest.into());
        }
        let mut bytes = serde_json::to_vec_pretty(&v)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, mut manifest: RunManifest) -> Result<PathBuf> {
        manifest.outputs = std::mem::take(&mut self.written);
        let mut v = serde_json::to_value(&manifest)?;
        v["manifest_digest"] = manifest.digest().into();
        let mut bytes = serde_json::to_vec_pretty(&v)?;
        bytes.push(b'\n');
        let path = self.root.join("manifest.json");
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Percentage with two decimals, e.g. `32.03%`.
pub fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}
