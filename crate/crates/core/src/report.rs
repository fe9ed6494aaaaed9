//! Finding model and `report.json` assembly.
//!
//! The JSON layout is versioned; [`REPORT_SCHEMA`] is the JSON Schema for
//! the current version and ships with the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.v1.schema.json");
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Data,
    Modeling,
    Interpretation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Finding {
    pub id: String,
    pub level: Level,
    /// Dotted kind, e.g. `simpson.sign_reversal` or `kde.false_center`.
    pub kind: String,
    pub severity: Severity,
    pub metrics: BTreeMap<String, f64>,
    /// Paths relative to the report directory.
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

impl Finding {
    pub fn new(id: impl Into<String>, level: Level, kind: impl Into<String>, severity: Severity) -> Self {
        Self {
            id: id.into(),
            level,
            kind: kind.into(),
            severity,
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Records a metric. Non-finite values cannot be represented in JSON and
    /// are moved into the notes instead.
    pub fn metric(mut self, name: impl Into<String>, value: f64) -> Self {
        let name = name.into();
        if value.is_finite() {
            self.metrics.insert(name, value);
        } else {
            self.notes.push(format!("metric `{name}` is {value}"));
        }
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn artifact(mut self, path: impl Into<String>) -> Self {
        self.artifacts.push(path.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeveritySummary {
    pub info: usize,
    pub warning: usize,
    pub critical: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditReport {
    pub schema_version: String,
    pub tool_version: String,
    pub command: String,
    pub seed: Option<u64>,
    /// Effective configuration as run.
    pub config: serde_json::Value,
    /// RFC 3339, or `null` when timestamps are suppressed.
    pub created_at: Option<String>,
    pub summary: SeveritySummary,
    pub findings: Vec<Finding>,
}

impl AuditReport {
    pub fn new(command: impl Into<String>, config: serde_json::Value, seed: Option<u64>, timestamp: bool) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            created_at: timestamp.then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            summary: SeveritySummary::default(),
            findings: Vec::new(),
        }
    }

    pub fn push(&mut self, finding: Finding) {
        self.findings.push(finding);
    }

    /// Sorts findings by `(level, kind, id)` and recomputes the summary.
    pub fn finalize(&mut self) {
        self.findings
            .sort_by(|a, b| (a.level, &a.kind, &a.id).cmp(&(b.level, &b.kind, &b.id)));
        let mut s = SeveritySummary::default();
        for f in &self.findings {
            match f.severity {
                Severity::Info => s.info += 1,
                Severity::Warning => s.warning += 1,
                Severity::Critical => s.critical += 1,
            }
        }
        s.total = self.findings.len();
        self.summary = s;
    }

    pub fn max_severity(&self) -> Option<Severity> {
        self.findings.iter().map(|f| f.severity).max()
    }

    pub fn artifact_paths(&self) -> BTreeSet<&str> {
        self.findings
            .iter()
            .flat_map(|f| f.artifacts.iter().map(String::as_str))
            .collect()
    }
}

/// Finalises the report and writes `report.json` into `out_dir`. Every
/// artifact must already exist under `out_dir`.
pub fn write_report(report: &mut AuditReport, out_dir: &Path) -> Result<PathBuf> {
    report.finalize();
    let mut seen = BTreeSet::new();
    for f in &report.findings {
        if !seen.insert(f.id.as_str()) {
            return Err(Error::Internal(format!("duplicate finding id `{}`", f.id)));
        }
    }
    for a in report.artifact_paths() {
        if !out_dir.join(a).is_file() {
            return Err(Error::Internal(format!("artifact `{a}` was not written")));
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(REPORT_FILE);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_report(path: &Path) -> Result<AuditReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `bytes` to `out_dir/rel`, creating parent directories.
pub fn write_artifact(out_dir: &Path, rel: &str, bytes: &[u8]) -> Result<String> {
    let path = out_dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(rel.to_string())
}
