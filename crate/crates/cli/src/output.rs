//! File writers. Every file carries the tool version and config hash: CSV
//! files in a leading `#` comment line, JSON files in an envelope.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'a str,
    schema_version: u32,
    tool_version: &'a str,
    config_hash: &'a str,
    data: &'a T,
}

/// Writes into one output directory, stamping each file.
pub struct Writer {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, hash: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            written: Vec::new(),
        })
    }

    pub fn header(&self) -> String {
        csv_header(&self.hash)
    }

    /// `body` starts with its column header line.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let text = format!("{}\n{body}", self.header());
        self.put(name, &text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, schema: &str, data: &T) -> Result<PathBuf> {
        let env = Envelope {
            schema,
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            config_hash: &self.hash,
            data,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        self.put(name, &text)
    }

    fn put(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn csv_header(hash: &str) -> String {
    format!("# betaproc {TOOL_VERSION} schema {SCHEMA_VERSION} config {hash}")
}

/// Reads a CSV written by [`Writer::csv`]: comment lines are skipped, the
/// first remaining line is the header.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .with_context(|| format!("{} is empty", path.display()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines.map(|l| l.split(',').map(|s| s.trim().to_string()).collect()).collect();
    Ok((header, rows))
}
