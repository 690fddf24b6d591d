//! Run manifests: UTF-8 `key=value` lines, paths relative to the manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{CliError, Result};

pub const FORMAT: &str = "fracollapse-manifest";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        let mut m = Manifest::default();
        m.set("format", FORMAT);
        m.set("format_version", FORMAT_VERSION);
        m.set("tool_version", env!("CARGO_PKG_VERSION"));
        m.set("snapshot_format_version", fracollapse::snapshot::VERSION_PLAIN);
        m.set("ground_state_format_version", fracollapse::snapshot::VERSION_GROUND_STATE);
        m.set("command", command);
        m.set("created_unix", unix_now());
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn config(&mut self, echo: &[(String, String)]) {
        for (k, v) in echo {
            self.set(&format!("config.{k}"), v);
        }
    }

    /// Records `path` relative to `root`; artifact keys are checked on `write`.
    pub fn artifact(&mut self, key: &str, root: &Path, path: &Path) {
        let rel = path.strip_prefix(root).unwrap_or(path);
        self.set(key, rel.display());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self
            .get(key)
            .ok_or_else(|| CliError::Data(format!("manifest lacks '{key}'")))?;
        v.parse()
            .map_err(|_| CliError::Data(format!("manifest '{key}' is not a number: {v}")))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut m = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Data(format!("manifest line {}: expected key=value", i + 1)))?;
            m.set(k, v);
        }
        if m.get("format") != Some(FORMAT) {
            return Err(CliError::Data("not a fracollapse manifest".into()));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Manifest::parse(&text)
    }

    /// Stamps the finish time and writes; fails if a recorded artifact is absent.
    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.set("finished_unix", unix_now());
        let root = path.parent().unwrap_or(Path::new("."));
        for (k, v) in &self.entries {
            if is_artifact(k) && !root.join(v).exists() {
                return Err(CliError::Data(format!("manifest references missing {k}: {v}")));
            }
        }
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn resolve(&self, manifest_path: &Path, key: &str) -> Result<PathBuf> {
        let v = self
            .get(key)
            .ok_or_else(|| CliError::Data(format!("manifest lacks '{key}'")))?;
        Ok(manifest_path.parent().unwrap_or(Path::new(".")).join(v))
    }
}

fn is_artifact(key: &str) -> bool {
    matches!(
        key,
        "ground_state" | "ground_state_dir" | "diagnostics_csv" | "snapshot_dir" | "snapshot" | "plot" | "report"
    )
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
