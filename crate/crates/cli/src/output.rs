//! Artifact envelopes. Every JSON artifact and every CSV header carries the
//! schema version, the run config and the SHA-256 of each input file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

pub fn hash_file(path: &Path) -> Result<InputFile, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(InputFile { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) })
}

pub struct Artifacts<'a> {
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub inputs: Vec<InputFile>,
}

impl Artifacts<'_> {
    fn dir(&self) -> Result<&Path, CliError> {
        fs::create_dir_all(&self.config.out)?;
        Ok(&self.config.out)
    }

    pub fn path(&self, name: &str) -> Result<PathBuf, CliError> {
        Ok(self.dir()?.join(name))
    }

    /// Wraps `result` in the envelope and writes `<out>/<name>`.
    pub fn write_json(&self, name: &str, pass: bool, notes: &[String], result: Value) -> Result<PathBuf, CliError> {
        let doc = json!({
            "version": SCHEMA_VERSION,
            "command": self.command,
            "pass": pass,
            "notes": notes,
            "config": self.config,
            "config_text": self.config.to_text(),
            "inputs": self.inputs,
            "result": result,
        });
        let path = self.path(name)?;
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    /// Writes `<out>/<name>` with `#` comment lines ahead of `body`.
    pub fn write_csv(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let header = format!(
            "# version={SCHEMA_VERSION}\n# command={}\n# config={}\n# inputs={}\n",
            self.command,
            serde_json::to_string(self.config)?,
            serde_json::to_string(&self.inputs)?
        );
        let path = self.path(name)?;
        fs::write(&path, header + body)?;
        Ok(path)
    }

    /// Metadata stored inside persisted field containers.
    pub fn field_meta(&self) -> Value {
        json!({ "version": SCHEMA_VERSION, "command": self.command, "config": self.config, "inputs": self.inputs })
    }
}
