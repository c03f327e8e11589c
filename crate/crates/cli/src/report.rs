//! Deterministic reports.
//!
//! A report is stable for a given scenario and engine version: check order
//! follows declaration order, counters are sorted maps, and the only
//! run-dependent field is the duration, which consumers exclude when
//! diffing.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub counters: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    pub fn pass(name: &str) -> Self {
        CheckResult {
            name: name.to_string(),
            status: Status::Pass,
            counters: BTreeMap::new(),
            witness: None,
            detail: None,
        }
    }

    pub fn fail(name: &str, witness: Option<String>, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            status: Status::Fail,
            counters: BTreeMap::new(),
            witness,
            detail: Some(detail),
        }
    }

    pub fn not_applicable(name: &str, reason: String) -> Self {
        CheckResult {
            name: name.to_string(),
            status: Status::NotApplicable,
            counters: BTreeMap::new(),
            witness: None,
            detail: Some(reason),
        }
    }

    pub fn counter(mut self, key: &str, value: u64) -> Self {
        self.counters.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub checks: Vec<CheckResult>,
    pub duration_ms: u128,
}

impl Report {
    pub fn new(scenario: String, seed: Option<u64>, checks: Vec<CheckResult>) -> Self {
        let status = if checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        };
        Report {
            scenario,
            status,
            seed,
            checks,
            duration_ms: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn emit_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario {}\n", self.scenario));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed {seed}\n"));
        }
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::NotApplicable => "N/A ",
            };
            out.push_str(&format!("[{tag}] {}", c.name));
            for (k, v) in &c.counters {
                out.push_str(&format!(" {k}={v}"));
            }
            if let Some(w) = &c.witness {
                out.push_str(&format!(" witness={w}"));
            }
            if let Some(d) = &c.detail {
                out.push_str(&format!(" ({d})"));
            }
            out.push('\n');
        }
        let overall = match self.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not-applicable",
        };
        out.push_str(&format!(
            "result: {overall} ({} checks, {} ms)\n",
            self.checks.len(),
            self.duration_ms
        ));
        out
    }

    pub fn emit_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
