//! Per-check verification records shared by the suites and the CLI.

use serde::{Deserialize, Serialize};

/// Where the worst case of a check was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorstAt {
    Point { re: f64, im: f64 },
    Parameter { name: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Smallest `bound - value` seen; negative means violated.
    pub worst_slack: f64,
    pub worst_at: Option<WorstAt>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    /// Record that passes iff `worst_slack >= -tolerance`.
    pub fn from_slack(name: impl Into<String>, worst_slack: f64, worst_at: Option<WorstAt>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            worst_slack,
            worst_at,
            tolerance,
            passed: worst_slack >= -tolerance,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}
