//! Machine-readable run summary.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: bool,
    pub observed: bool,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, expected: bool, observed: bool) -> Self {
        Check {
            name: name.into(),
            expected,
            observed,
            pass: expected == observed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolvedGrid {
    pub epsilon: f64,
    pub dt: f64,
    pub spacing: f64,
}

/// Everything a downstream consumer needs without reparsing the CSVs. The
/// embedded config mirrors the normalized TOML, defaults included; grids
/// that were left automatic appear resolved per tolerance.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub model: String,
    pub operation: String,
    pub seed: u64,
    pub claim: String,
    pub config: ExperimentConfig,
    pub resolved_grids: Vec<ResolvedGrid>,
    pub rows: usize,
    pub counts: BTreeMap<String, usize>,
    pub unknown_fraction: f64,
    #[serde(flatten)]
    pub summary: Map<String, Value>,
    pub checks: Vec<Check>,
    pub failed_checks: Vec<String>,
    pub exit_code: i32,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report fields are plain data");
        text.push('\n');
        text
    }
}
