//! Verification reports and table output.

use serde::{Deserialize, Serialize};

/// Whether a check passes below or above its threshold. Residual-style
/// checks are `Below`; existence-style checks (a quantity that must stay
/// away from zero) are `Above`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Below,
    Above,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_residual: f64,
    pub threshold: f64,
    pub kind: Bound,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl Check {
    pub fn below(name: &str, max_residual: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            max_residual,
            threshold,
            kind: Bound::Below,
            passed: max_residual < threshold,
            detail: None,
        }
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            max_residual: value,
            threshold,
            kind: Bound::Above,
            passed: value > threshold,
            detail: None,
        }
    }

    pub fn failed(name: &str, threshold: f64, detail: String) -> Check {
        Check {
            name: name.to_string(),
            max_residual: f64::INFINITY,
            threshold,
            kind: Bound::Below,
            passed: false,
            detail: Some(detail),
        }
    }

    pub fn with_detail(mut self, detail: String) -> Check {
        self.detail = Some(detail);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    /// Checks are sorted by name so report bytes are reproducible.
    pub fn new(suite: &str, seed: u64, mut checks: Vec<Check>) -> Report {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let passed = checks.iter().all(|c| c.passed);
        Report {
            suite: suite.to_string(),
            seed,
            passed,
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// CSV with IEEE-754 round-trip formatting (17 significant digits).
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
