//! Run reports and their serialization.
//!
//! JSON goes through `serde_json::Value`, whose maps are ordered by key, so
//! the bytes depend only on the content. CSV series have fixed headers:
//!
//! | verb | header |
//! |---|---|
//! | identity-verify, identity-steps | [`IDENTITY_HEADER`] |
//! | carleman-heat | [`HEAT_HEADER`] (weight trace: [`TRACE_HEADER`]) |
//! | carleman-gl | [`GL_HEADER`] |
//! | inverse-gl | [`INVERSE_HEADER`] |
//! | demo ode | [`ODE_HEADER`] |
//! | demo first_order | [`TRANSPORT_HEADER`] |

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const IDENTITY_HEADER: [&str; 8] = ["case", "n", "label", "expect_zero", "zero", "lhs_terms", "rhs_terms", "surviving"];
pub const HEAT_HEADER: [&str; 7] = ["pair", "lambda", "lhs", "rhs", "ratio", "lhs_se", "rhs_se"];
pub const TRACE_HEADER: [&str; 8] = ["x", "t", "gamma", "phi", "alpha", "theta", "a", "b"];
pub const GL_HEADER: [&str; 7] = ["ensemble", "mu", "lhs", "rhs", "ratio", "lhs_se", "rhs_se"];
pub const INVERSE_HEADER: [&str; 6] = ["member", "n1", "n2", "n3", "quotient", "mu_star"];
pub const ODE_HEADER: [&str; 4] = ["system", "lambda", "worst_ratio", "passed"];
pub const TRANSPORT_HEADER: [&str; 3] = ["function", "lambda", "quotient"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub detail: Value,
}

impl Check {
    pub fn new(id: impl Into<String>, passed: bool, detail: impl Serialize) -> Self {
        Check { id: id.into(), passed, detail: serde_json::to_value(detail).unwrap_or(Value::Null) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommandEcho {
    pub verb: String,
    pub args: Value,
    /// the effective configuration after defaults
    pub config: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: CommandEcho,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// only with `--timings`; off by default so reports stay byte-stable
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<Value>,
}

impl RunReport {
    pub fn new(command: CommandEcho, seed: u64, checks: Vec<Check>) -> Self {
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        RunReport { command, seed, passed, checks, timings_ms: None }
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report is plain data");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, report.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Rows of one CSV series; floats use the shortest round-trip form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Series {
    pub fn new(header: &[&'static str]) -> Self {
        Series { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}
