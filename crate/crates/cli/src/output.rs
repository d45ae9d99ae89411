//! Artifact files: JSON envelopes carrying the config hash and seed, plus plot-ready CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{usage, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub data: T,
}

impl<T> Artifact<T> {
    pub fn new(stage: &str, cfg: &RunConfig, data: T) -> Self {
        Self { stage: stage.into(), config_hash: cfg.hash(), seed: cfg.seed, data }
    }
}

pub fn artifact_path(dir: &Path, stage: &str) -> PathBuf {
    dir.join(format!("{stage}.json"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(d) = path.parent() {
        fs::create_dir_all(d)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_artifact<T: Serialize>(cfg: &RunConfig, stage: &str, data: &T) -> CliResult<PathBuf> {
    let path = artifact_path(&cfg.out_dir, stage);
    write_json(&path, &Artifact::new(stage, cfg, data))?;
    Ok(path)
}

/// Loads `stage` only if it was produced under the same configuration.
pub fn read_matching<T: DeserializeOwned>(cfg: &RunConfig, stage: &str) -> CliResult<Option<T>> {
    let path = artifact_path(&cfg.out_dir, stage);
    if !path.is_file() {
        return Ok(None);
    }
    let a: Artifact<T> = serde_json::from_str(&fs::read_to_string(&path)?)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok((a.config_hash == cfg.hash()).then_some(a.data))
}

pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n", width: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "csv row width");
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        if let Some(d) = path.parent() {
            fs::create_dir_all(d)?;
        }
        fs::write(path, &self.text)?;
        Ok(())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[macro_export]
macro_rules! cells {
    ($($v:expr),* $(,)?) => { vec![$($v.to_string()),*] };
}
