use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FUNNEL_TEXT: &str = "funnel.txt";
pub const FUNNEL_JSON: &str = "funnel.json";
/// Wall-clock times live apart from the counts so that reruns produce
/// byte-identical funnel files.
pub const FUNNEL_TIMINGS: &str = "funnel.timings.tsv";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub input: u64,
    pub kept: u64,
    pub removed: u64,
    pub reasons: BTreeMap<String, u64>,
    /// Wall-clock microseconds spent in the stage.
    #[serde(skip)]
    pub wall_us: u64,
}

impl StageReport {
    pub fn new(name: &str) -> Self {
        StageReport {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn record_removal(&mut self, reason: &str) {
        self.removed += 1;
        *self.reasons.entry(reason.to_string()).or_default() += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub input_total: u64,
    pub stages: Vec<StageReport>,
    pub final_kept: u64,
}

impl FunnelReport {
    /// Every stage must account for all of its input, its removals must be
    /// fully attributed to reasons, and each stage must consume exactly what
    /// the previous one kept.
    pub fn validate(&self) -> Result<()> {
        let mut expected_input = self.input_total;
        for stage in &self.stages {
            let bad = |msg: String| Err(Error::Report(format!("stage `{}`: {msg}", stage.name)));
            if stage.input != expected_input {
                return bad(format!("input {} but previous stage kept {expected_input}", stage.input));
            }
            if stage.kept + stage.removed != stage.input {
                return bad(format!(
                    "kept {} + removed {} != input {}",
                    stage.kept, stage.removed, stage.input
                ));
            }
            let attributed: u64 = stage.reasons.values().sum();
            if attributed != stage.removed {
                return bad(format!("reasons account for {attributed} of {} removals", stage.removed));
            }
            expected_input = stage.kept;
        }
        if self.final_kept != expected_input {
            return Err(Error::Report(format!(
                "final count {} but last stage kept {expected_input}",
                self.final_kept
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("stage, input, kept, removed\n");
        for s in &self.stages {
            writeln!(out, "{}, {}, {}, {}", s.name, s.input, s.kept, s.removed).unwrap();
        }
        writeln!(out, "total, {}, {}, {}", self.input_total, self.final_kept, self.input_total - self.final_kept)
            .unwrap();
        for s in self.stages.iter().filter(|s| !s.reasons.is_empty()) {
            let reasons: Vec<String> = s.reasons.iter().map(|(r, n)| format!("{r}={n}")).collect();
            writeln!(out, "# {}: {}", s.name, reasons.join(" ")).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn timings_tsv(&self) -> String {
        let mut out = String::from("stage\twall_us\n");
        for s in &self.stages {
            writeln!(out, "{}\t{}", s.name, s.wall_us).unwrap();
        }
        out
    }

    /// Inverse of [`emit_funnel_report`]: reads the JSON record and the
    /// timings file from `dir`.
    pub fn parse(dir: &Path) -> Result<Self> {
        let path = dir.join(FUNNEL_JSON);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut report: FunnelReport =
            serde_json::from_str(&text).map_err(|e| Error::Report(e.to_string()))?;
        let path = dir.join(FUNNEL_TIMINGS);
        if let Ok(text) = std::fs::read_to_string(&path) {
            for (line, stage) in text.lines().skip(1).zip(report.stages.iter_mut()) {
                stage.wall_us = line
                    .split('\t')
                    .nth(1)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Report(format!("bad timings line `{line}`")))?;
            }
        }
        report.validate()?;
        Ok(report)
    }
}

/// Writes the text table, JSON record and timings to `dir`. A report that
/// violates the chaining invariant is refused.
pub fn emit_funnel_report(report: &FunnelReport, dir: &Path) -> Result<()> {
    report.validate()?;
    for (name, body) in [
        (FUNNEL_TEXT, report.to_text()),
        (FUNNEL_JSON, report.to_json()),
        (FUNNEL_TIMINGS, report.timings_tsv()),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
