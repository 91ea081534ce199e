//! Run manifests: the resolved configuration of one run plus provenance.
//!
//! A manifest is itself a valid config file (provenance lives in `#` lines), so
//! `nlkg <command> --config <dir>/manifest.txt` repeats the run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.txt";

/// The reference every output file carries.
pub fn note() -> String {
    format!("manifest: {MANIFEST_NAME}")
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: &'static str,
    /// Resolved `key = value` lines, all defaults included.
    pub config: String,
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// `SOURCE_DATE_EPOCH` pins the timestamp for reproducible manifests.
fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .map(|secs| UNIX_EPOCH + Duration::from_secs(secs))
        .unwrap_or_else(SystemTime::now);
    humantime::format_rfc3339_seconds(now).to_string()
}

impl RunManifest {
    pub fn new(command: &'static str, config: String) -> Self {
        Self { command, config, inputs: Vec::new(), outputs: Vec::new(), notes: Vec::new() }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let sum = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), sum));
        Ok(())
    }

    pub fn output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# nlkg run manifest\n");
        out.push_str(&format!("# command: {}\n", self.command));
        out.push_str(&format!("# version: {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("# timestamp: {}\n", timestamp()));
        for (path, sum) in &self.inputs {
            out.push_str(&format!("# input: {} sha256={sum}\n", path.display()));
        }
        for name in &self.outputs {
            out.push_str(&format!("# output: {name}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        out.push_str(&self.config);
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::write(dir.join(MANIFEST_NAME), self.to_text()).map_err(CliError::io)
    }
}

/// Creates `dir` and refuses it when it already holds the manifest of another
/// command, so that each output directory describes a single run.
pub fn prepare_dir(dir: &Path, command: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(CliError::io)?;
    let path = dir.join(MANIFEST_NAME);
    let Ok(text) = fs::read_to_string(&path) else {
        return Ok(());
    };
    let previous = text.lines().find_map(|l| l.strip_prefix("# command: ")).unwrap_or("");
    if previous != command {
        return Err(CliError::Config(format!(
            "{} belongs to a `{previous}` run; choose another --out for `{command}`",
            path.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_is_a_config_file() {
        let mut m = RunManifest::new("sweep", "dr = 0.01\nfamily = fig1_1_left\n".into());
        m.output("records.csv");
        m.notes.push("ground state: central = 4.3".into());
        let kv = nlkg_core::config::KeyValues::parse(&m.to_text()).unwrap();
        let mut kv = kv;
        assert_eq!(kv.take("dr").as_deref(), Some("0.01"));
        assert_eq!(kv.take("family").as_deref(), Some("fig1_1_left"));
        assert!(kv.is_empty());
    }

    #[test]
    fn foreign_manifest_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        RunManifest::new("sweep", String::new()).write(dir.path()).unwrap();
        assert!(prepare_dir(dir.path(), "sweep").is_ok());
        assert!(prepare_dir(dir.path(), "render").is_err());
    }
}
