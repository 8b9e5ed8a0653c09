use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

/// Output files of one command, keyed by file name.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Bundle {
    files: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, name: impl Into<String>, content: String) {
        self.files.insert(name.into(), content.into_bytes());
    }

    pub fn json<T: Serialize + ?Sized>(
        &mut self,
        name: impl Into<String>,
        value: &T,
    ) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(name, text);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .get(name)
            .and_then(|b| std::str::from_utf8(b).ok())
    }

    /// Write every file and a manifest listing them into `dir`.
    pub fn write(
        &self,
        dir: &Path,
        command: &str,
        config: &RunConfig,
        workers: usize,
    ) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        let manifest = Manifest {
            tool: "instab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            files: self.files.keys().cloned().collect(),
            run: RunInfo {
                created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                workers,
            },
        };
        let path = dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Everything needed to rerun the command. `run` holds the fields that vary
/// between otherwise identical runs.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    files: Vec<String>,
    run: RunInfo,
}

#[derive(Debug, Serialize)]
struct RunInfo {
    created_at: String,
    workers: usize,
}
