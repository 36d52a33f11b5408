use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::Config;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Info,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub criterion: String,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Self {
            criterion: criterion.into(),
            status,
            detail: detail.into(),
        }
    }

    pub fn check(criterion: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self::new(criterion, status, detail)
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config_hash: String,
    pub level: u32,
    pub config: BTreeMap<String, String>,
    /// Tolerance name → (value, source).
    pub tolerances: BTreeMap<String, (String, String)>,
    pub results: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub verdict: String,
    pub status: Status,
}

impl Report {
    pub fn new(
        command: &str,
        cfg: &Config,
        level: u32,
        results: serde_json::Value,
        verdicts: Vec<Verdict>,
        headline: &str,
    ) -> Self {
        let status = overall(&verdicts);
        let word = match status {
            Status::Pass | Status::Info => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        Self {
            command: command.to_string(),
            config_hash: cfg.hash(),
            level,
            config: cfg.entries(),
            tolerances: cfg.tolerances(),
            results,
            verdict: format!("{headline}: {word}"),
            verdicts,
            status,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass | Status::Info => 0,
            Status::Inconclusive => 2,
            Status::Fail => 1,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("summary.json"), self)
    }
}

/// Any failure wins, then any inconclusive verdict.
pub fn overall(verdicts: &[Verdict]) -> Status {
    if verdicts.iter().any(|v| v.status == Status::Fail) {
        Status::Fail
    } else if verdicts.iter().any(|v| v.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub command: String,
    pub config_hash: Option<String>,
    pub error: String,
    pub causes: Vec<String>,
}

impl ErrorReport {
    pub fn from_error(command: &str, cfg: Option<&Config>, err: &anyhow::Error) -> Self {
        Self {
            command: command.to_string(),
            config_hash: cfg.map(Config::hash),
            error: err.to_string(),
            causes: err.chain().skip(1).map(|e| e.to_string()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_status() {
        let p = Verdict::check("a", true, "");
        let f = Verdict::check("b", false, "");
        let i = Verdict::new("c", Status::Inconclusive, "");
        let n = Verdict::new("d", Status::Info, "");
        assert_eq!(overall(&[p.clone(), n.clone()]), Status::Pass);
        assert_eq!(overall(&[p.clone(), i.clone()]), Status::Inconclusive);
        assert_eq!(overall(&[i, f, p]), Status::Fail);
        assert_eq!(overall(&[]), Status::Pass);
    }
}
