use std::fs;
use std::path::Path;
use std::time::Duration;

use btu_core::SearchBudget;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::{CliError, Output};

/// Everything needed to re-run a command and check that it reproduces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Arguments after the program name, without `--manifest`.
    pub argv: Vec<String>,
    pub version: String,
    pub seed: Option<u64>,
    pub budget: Option<SearchBudget>,
    pub workers: Option<usize>,
    pub result_summary: Value,
    pub wall_seconds: f64,
    pub exit_code: u8,
    /// Standard output of the run, byte for byte.
    pub output: String,
}

fn without_manifest_flag(argv: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
            continue;
        }
        if a == "--manifest" {
            skip = true;
            continue;
        }
        if a.starts_with("--manifest=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

impl RunManifest {
    pub fn record(argv: &[String], out: &Output, elapsed: Duration) -> Self {
        Self {
            argv: without_manifest_flag(argv),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: out.seed,
            workers: out.budget.as_ref().map(|b| b.parallel_width),
            budget: out.budget.clone(),
            result_summary: out.summary.clone(),
            wall_seconds: elapsed.as_secs_f64(),
            exit_code: out.exit_code,
            output: out.text.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(&serde_json::to_value(self).expect("manifest serialises"))
            .expect("Value serialises");
        text.push('\n');
        fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
    }
}
