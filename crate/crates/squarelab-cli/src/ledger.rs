//! Append-only JSON-lines experiment ledger.
//!
//! One record per CLI run, one JSON object per line. Appends are crash-safe
//! (write + sync); corrupt lines are skipped with a warning on read so a
//! damaged ledger never blocks an export.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const LEDGER_ENV: &str = "SQUARELAB_LEDGER";
pub const DEFAULT_LEDGER: &str = "runs.jsonl";

/// One named result: the exact string is authoritative, the float rendition
/// advisory (absent for non-numeric results such as masks).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultValue {
    pub exact: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub float: Option<f64>,
}

impl ResultValue {
    pub fn exact_only(exact: impl Into<String>) -> ResultValue {
        ResultValue {
            exact: exact.into(),
            float: None,
        }
    }

    pub fn with_float(exact: impl Into<String>, float: f64) -> ResultValue {
        ResultValue {
            exact: exact.into(),
            float: Some(float),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentRecord {
    pub id: String,
    pub timestamp: String,
    pub subcommand: String,
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub results: BTreeMap<String, ResultValue>,
    pub version: String,
}

impl ExperimentRecord {
    pub fn new(
        subcommand: &str,
        params: BTreeMap<String, String>,
        seed: Option<u64>,
        results: BTreeMap<String, ResultValue>,
    ) -> ExperimentRecord {
        ExperimentRecord {
            id: uuid::Uuid::new_v4().to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true),
            subcommand: subcommand.to_string(),
            params,
            seed,
            results,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Resolution order: explicit flag, config entry, environment, default.
pub fn resolve_path(flag: Option<PathBuf>, config: Option<String>) -> PathBuf {
    flag.or(config.map(PathBuf::from))
        .or_else(|| std::env::var(LEDGER_ENV).ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_LEDGER))
}

pub fn append(path: &Path, record: &ExperimentRecord) -> Result<()> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening ledger {}", path.display()))?;
    let json = serde_json::to_string(record)?;
    writeln!(file, "{json}")?;
    file.sync_all()?;
    Ok(())
}

/// All parseable records plus the count of skipped corrupt lines; warnings
/// go to the provided sink (stderr in the CLI).
pub fn read_all(path: &Path, warn: &mut impl Write) -> Result<(Vec<ExperimentRecord>, usize)> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening ledger {}", path.display()))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut warnings = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ExperimentRecord>(&line) {
            Ok(record) => records.push(record),
            Err(e) => {
                warnings += 1;
                writeln!(
                    warn,
                    "warning: ledger {} line {}: {e}",
                    path.display(),
                    lineno + 1
                )?;
            }
        }
    }
    Ok((records, warnings))
}
