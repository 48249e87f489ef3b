//! Machine-readable run reports shared by the command-line front end and the
//! acceptance drivers. Maps are kept in sorted order so identical
//! configurations produce byte-identical JSON.

use crate::series::SeriesJson;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckItem {
    pub fn pass(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckItem { name: name.into(), status: CheckStatus::Pass, detail: detail.into() }
    }

    pub fn fail(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckItem { name: name.into(), status: CheckStatus::Fail, detail: detail.into() }
    }

    pub fn info(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckItem { name: name.into(), status: CheckStatus::Info, detail: detail.into() }
    }

    pub fn of(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        if ok {
            Self::pass(name, detail)
        } else {
            Self::fail(name, detail)
        }
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub family: Option<String>,
    pub order: String,
    pub checks: Vec<CheckItem>,
    pub series: BTreeMap<String, SeriesJson>,
}

impl RunReport {
    pub fn new(command: &str, family: Option<&str>, order: impl ToString) -> Self {
        RunReport {
            command: command.to_string(),
            family: family.map(|s| s.to_string()),
            order: order.to_string(),
            checks: Vec::new(),
            series: BTreeMap::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
