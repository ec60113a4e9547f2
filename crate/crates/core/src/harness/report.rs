use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::chains::io::chain_to_json;
use crate::chains::PolyChain;
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;

/// First 16 hex digits of the SHA-256 of the chain file text.
pub fn chain_digest(chain: &PolyChain) -> String {
    text_digest(&chain_to_json(chain))
}

pub fn text_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReportRow {
    pub index: usize,
    pub replicate: usize,
    pub digest: String,
    pub quantities: BTreeMap<String, f64>,
    pub pass: bool,
    /// the violated inequality, or the error that aborted the row
    pub violation: Option<String>,
}

impl ReportRow {
    pub fn new(index: usize, replicate: usize, digest: String) -> Self {
        ReportRow {
            index,
            replicate,
            digest,
            quantities: BTreeMap::new(),
            pass: true,
            violation: None,
        }
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.quantities.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.quantities.get(key).copied()
    }

    /// Records `lhs <= rhs`; the first violation is kept.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail
    pub fn require(&mut self, lhs: f64, rhs: f64, text: &str) {
        if !(lhs <= rhs) {
            self.fail(format!("{text}: {lhs} > {rhs}"));
        }
    }

    pub fn fail(&mut self, message: String) {
        if self.pass {
            self.violation = Some(message);
        }
        self.pass = false;
    }

    pub fn aborted(index: usize, replicate: usize, digest: String, error: &Error) -> Self {
        let mut row = ReportRow::new(index, replicate, digest);
        row.fail(format!("error: {error}"));
        row
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SuiteCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub target_os: String,
    pub target_arch: String,
    pub debug_build: bool,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            target_os: std::env::consts::OS.into(),
            target_arch: std::env::consts::ARCH.into(),
            debug_build: cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub aggregates: BTreeMap<String, f64>,
    pub checks: Vec<SuiteCheck>,
    pub environment: Environment,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count() + self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Header row plus one line per report row; quantity columns are the sorted
    /// union of all quantity names.
    pub fn to_csv(&self) -> Result<String> {
        let keys: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.quantities.keys()).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["index", "replicate", "digest", "pass", "violation"];
        header.extend(keys.iter().map(|k| k.as_str()));
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            let mut rec = vec![
                r.index.to_string(),
                r.replicate.to_string(),
                r.digest.clone(),
                r.pass.to_string(),
                r.violation.clone().unwrap_or_default(),
            ];
            rec.extend(
                keys.iter()
                    .map(|k| r.quantities.get(*k).map(|v| format!("{v:e}")).unwrap_or_default()),
            );
            w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Writes `<experiment>.csv` / `<experiment>.json` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        let (ext, body) = match f {
            ReportFormat::Csv => ("csv", report.to_csv()?),
            ReportFormat::Json => ("json", report.to_json()),
        };
        let path = dir.join(format!("{}.{ext}", report.experiment));
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
