use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One verified property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// None when the computation itself failed; see `error`.
    pub measured: Option<f64>,
    pub bound: f64,
    pub pass: bool,
    pub runtime_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckRecord {
    /// Passes when `measured < bound`.
    pub fn below(name: &str, measured: f64, bound: f64, runtime_ms: u64) -> Self {
        CheckRecord { name: name.into(), measured: Some(measured), bound, pass: measured < bound, runtime_ms, error: None }
    }

    /// A yes/no property; measured is 1 on violation.
    pub fn holds(name: &str, ok: bool, runtime_ms: u64) -> Self {
        CheckRecord { name: name.into(), measured: Some(if ok { 0.0 } else { 1.0 }), bound: 0.5, pass: ok, runtime_ms, error: None }
    }

    pub fn failed(name: &str, bound: f64, err: String, runtime_ms: u64) -> Self {
        CheckRecord { name: name.into(), measured: None, bound, pass: false, runtime_ms, error: Some(err) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
    /// Checks that do not apply to this Hamiltonian, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl VerificationReport {
    pub fn new(scenario: &str, checks: Vec<CheckRecord>, skipped: Vec<(String, String)>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport { scenario: scenario.into(), pass, checks, skipped }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| crate::Error::Numerical(format!("report serialisation: {e}")))
    }

    /// Fixed-width table, one row per check.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "scenario: {}", self.scenario)?;
        writeln!(w, "{:<32} {:>13} {:>10} {:>6} {:>10}", "check", "measured", "bound", "pass", "ms")?;
        writeln!(w, "{}", "-".repeat(75))?;
        for c in &self.checks {
            let measured = c.measured.map_or("error".to_string(), |m| format!("{m:.4e}"));
            let pass = if c.pass { "PASS" } else { "FAIL" };
            writeln!(w, "{:<32} {:>13} {:>10.1e} {:>6} {:>10}", c.name, measured, c.bound, pass, c.runtime_ms)?;
            if let Some(e) = &c.error {
                writeln!(w, "    {e}")?;
            }
        }
        for (name, why) in &self.skipped {
            writeln!(w, "{name:<32} {:>13} ({why})", "skipped")?;
        }
        writeln!(w, "{}", "-".repeat(75))?;
        writeln!(w, "overall: {}", if self.pass { "PASS" } else { "FAIL" })?;
        Ok(())
    }
}
