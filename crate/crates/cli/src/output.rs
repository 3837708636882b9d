//! Result bundle: deterministic payload files plus a timestamp sidecar.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mbdqc::verifier::TrialRecord;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const RESULT_SCHEMA: &str = "mbdqc-result/v1";
pub const RUNS_COLUMNS: [&str; 6] = ["trial", "verdict", "decision", "trap_failures", "wrong", "attacked_rounds"];

/// Files collected during a command and written once at the end.
#[derive(Debug, Default)]
pub struct Bundle {
    pub summary: Value,
    pub runs: Option<Vec<TrialRecord>>,
    pub traps: Option<String>,
    pub transcripts: Option<String>,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn runs_csv(records: &[TrialRecord]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::io("encoding runs.csv", std::io::Error::other(e));
    w.write_record(RUNS_COLUMNS).map_err(io)?;
    for r in records {
        let bit = |b: Option<bool>| b.map_or(String::new(), |b| u8::from(b).to_string());
        w.write_record([
            r.trial.to_string(),
            if r.verdict.accepted() { "accept" } else { "reject" }.to_string(),
            bit(r.verdict.decision()),
            r.trap_failures.to_string(),
            bit(r.wrong),
            r.attacked_rounds.to_string(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::io("encoding runs.csv", std::io::Error::other(e.to_string())))
}

/// Wraps a command result in the versioned envelope.
pub fn envelope(command: &str, seed: u64, config: Option<&str>, result: impl Serialize) -> CliResult<Value> {
    let result = serde_json::to_value(result).map_err(|e| CliError::io("encoding summary", e.into()))?;
    Ok(json!({
        "schema": RESULT_SCHEMA,
        "command": command,
        "seed": seed,
        "config": config,
        "result": result,
    }))
}

impl Bundle {
    /// Writes every file into `dir`, creating it if needed. Returns the paths.
    pub fn write(&self, dir: &Path, command: &str, started: f64) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> CliResult<()> {
            let path = dir.join(name);
            write(&path, bytes)?;
            written.push(path);
            Ok(())
        };
        let mut summary = serde_json::to_vec_pretty(&self.summary).map_err(|e| CliError::io("encoding summary", e.into()))?;
        summary.push(b'\n');
        put("summary.json", &summary)?;
        if let Some(runs) = &self.runs {
            put("runs.csv", &runs_csv(runs)?)?;
        }
        if let Some(traps) = &self.traps {
            put("traps.txt", traps.as_bytes())?;
        }
        if let Some(tr) = &self.transcripts {
            put("transcripts.txt", tr.as_bytes())?;
        }
        let meta = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix": started,
            "finished_unix": unix_now(),
        });
        let mut meta = serde_json::to_vec_pretty(&meta).map_err(|e| CliError::io("encoding meta", e.into()))?;
        meta.push(b'\n');
        put("meta.json", &meta)?;
        Ok(written)
    }
}
