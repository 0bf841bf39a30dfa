use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::Suite;
use crate::error::{Error, Result};

pub const SCHEMA: &str = "hqcalc-report/1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub suite: Suite,
    pub name: String,
    /// The identity or property being checked.
    pub identity: String,
    pub inputs_digest: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Largest node count of a single contour integral in the check (0 when none ran).
    pub max_nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Default)]
pub struct Timing {
    pub total_ms: f64,
    pub checks_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub config_digest: String,
    pub checks: Vec<CheckRecord>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
    pub timing: Timing,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Largest node count of any single integral across the run.
    pub fn max_nodes(&self) -> usize {
        self.checks.iter().map(|c| c.max_nodes).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the timing block, stable across runs with the same seed and config.
    pub fn to_json_canonical(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("suite,name,residual,tolerance,pass,max_nodes\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{:e},{:e},{},{}\n",
                c.suite, c.name, c.residual, c.tolerance, c.pass, c.max_nodes
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        file.write_all(self.csv().as_bytes())
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
    }
}
