//! Output plumbing: the run manifest and the CSV/JSON writers.
//!
//! Every run writes `manifest.json` before any data file. Floats in CSV
//! output carry 17 significant digits so reruns can be compared byte for
//! byte; the manifest timestamp is the only field allowed to differ.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Fully resolved parameters, sufficient to bit-reproduce the run.
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub config_path: Option<String>,
    pub out_dir: String,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        parameters: serde_json::Value,
        seed: Option<u64>,
        config_path: Option<&Path>,
        out_dir: &Path,
    ) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            parameters,
            seed,
            config_path: config_path.map(|p| p.display().to_string()),
            out_dir: out_dir.display().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// Creates the output directory and writes the manifest into it.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        write_json(&out_dir.join("manifest.json"), self)
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_csv(path: &PathBuf, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
