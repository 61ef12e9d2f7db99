use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::cli::CommonArgs;
use crate::error::{CliError, CliResult};

pub const SUMMARY: &str = "summary.json";
pub const RESULTS: &str = "results.csv";
pub const AUDIT: &str = "audit.jsonl";

/// Writes the output files of one invocation. With timestamps on, each
/// file carries exactly one extra line holding the generation time.
pub struct Outputs {
    dir: PathBuf,
    timestamp: Option<u64>,
}

impl Outputs {
    pub fn new(common: &CommonArgs) -> CliResult<Self> {
        fs::create_dir_all(&common.out).map_err(|source| CliError::Io {
            path: common.out.display().to_string(),
            source,
        })?;
        let timestamp =
            (!common.no_timestamp).then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
        Ok(Self {
            dir: common.out.clone(),
            timestamp,
        })
    }

    fn write(&self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Writes `summary.json` and returns the untimestamped JSON text.
    pub fn summary<T: Serialize>(&self, value: &T) -> CliResult<String> {
        let body = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
        let text = match (self.timestamp, body.strip_prefix("{\n")) {
            (Some(ts), Some(rest)) => format!("{{\n  \"generated_at_unix\": {ts},\n{rest}\n"),
            _ => format!("{body}\n"),
        };
        self.write(SUMMARY, &text)?;
        Ok(body)
    }

    pub fn csv(&self, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut text = String::new();
        if let Some(ts) = self.timestamp {
            text.push_str(&format!("# generated_at_unix={ts}\n"));
        }
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(RESULTS, &text)
    }

    pub fn jsonl<T: Serialize>(&self, lines: &[T]) -> CliResult<()> {
        let mut text = String::new();
        if let Some(ts) = self.timestamp {
            text.push_str(&format!("{{\"generated_at_unix\":{ts}}}\n"));
        }
        for line in lines {
            text.push_str(&serde_json::to_string(line).map_err(|e| CliError::Input(e.to_string()))?);
            text.push('\n');
        }
        self.write(AUDIT, &text)
    }
}
