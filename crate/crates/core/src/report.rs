//! Bound-check reports shared by the Monte Carlo and exact-chain code.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    ReportOnly,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::ReportOnly => "report-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// measured <= bound
    AtMost,
    /// measured >= bound
    AtLeast,
    /// |measured - bound| within tolerance
    Equal,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    /// The inequality being checked, written out.
    pub anchor: String,
    /// Optional table index (m, q, t, n, ...).
    pub index: Option<i64>,
    pub relation: Relation,
    pub bound: f64,
    pub measured: f64,
    /// Slack in the direction of the inequality; negative means violated
    /// before tolerance is applied.
    pub margin: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Hard entries gate the exit status; soft ones are advisory.
    pub hard: bool,
}

impl BoundEntry {
    fn new(
        name: &str,
        anchor: &str,
        relation: Relation,
        bound: f64,
        measured: f64,
        tolerance: f64,
    ) -> Self {
        let margin = match relation {
            Relation::AtMost => bound - measured,
            Relation::AtLeast => measured - bound,
            Relation::Equal => -(measured - bound).abs(),
            Relation::Report => measured - bound,
        };
        let verdict = match relation {
            Relation::Report => Verdict::ReportOnly,
            Relation::Equal => {
                if margin >= -tolerance {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
            _ => {
                if margin >= -tolerance && margin.is_finite() {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        };
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            index: None,
            relation,
            bound,
            measured,
            margin,
            tolerance,
            verdict,
            hard: relation != Relation::Report,
        }
    }

    pub fn at_most(name: &str, anchor: &str, bound: f64, measured: f64, tol: f64) -> Self {
        Self::new(name, anchor, Relation::AtMost, bound, measured, tol)
    }

    pub fn at_least(name: &str, anchor: &str, bound: f64, measured: f64, tol: f64) -> Self {
        Self::new(name, anchor, Relation::AtLeast, bound, measured, tol)
    }

    pub fn equal(name: &str, anchor: &str, expected: f64, measured: f64, tol: f64) -> Self {
        Self::new(name, anchor, Relation::Equal, expected, measured, tol)
    }

    pub fn report(name: &str, anchor: &str, reference: f64, measured: f64) -> Self {
        Self::new(name, anchor, Relation::Report, reference, measured, 0.0)
    }

    pub fn with_index(mut self, index: i64) -> Self {
        self.index = Some(index);
        self
    }

    /// Keeps the verdict but stops it from gating the exit status.
    pub fn soft(mut self) -> Self {
        self.hard = false;
        self
    }

    /// The verdict, with soft failures marked advisory.
    pub fn verdict_label(&self) -> String {
        if self.hard || self.verdict != Verdict::Fail {
            self.verdict.as_str().to_string()
        } else {
            "fail (advisory)".to_string()
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub title: String,
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: BoundEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: BoundReport) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn get_indexed(&self, name: &str, index: i64) -> Option<&BoundEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name && e.index == Some(index))
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &BoundEntry> {
        self.entries
            .iter()
            .filter(|e| e.hard && e.verdict == Verdict::Fail)
    }

    pub fn all_hard_pass(&self) -> bool {
        self.hard_failures().next().is_none()
    }

    /// `name,paper_bound,measured,margin,verdict`
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "paper_bound", "measured", "margin", "verdict"])
            .map_err(csv_err)?;
        for e in &self.entries {
            let name = match e.index {
                Some(i) => format!("{}[{}]", e.name, i),
                None => e.name.clone(),
            };
            w.write_record([
                name,
                fmt_num(e.bound),
                fmt_num(e.measured),
                fmt_num(e.margin),
                e.verdict_label(),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }

    /// `name,m,value,paper_bound,margin,verdict`
    pub fn to_table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "m", "value", "paper_bound", "margin", "verdict"])
            .map_err(csv_err)?;
        for e in &self.entries {
            w.write_record([
                e.name.clone(),
                e.index.map(|i| i.to_string()).unwrap_or_default(),
                fmt_num(e.measured),
                fmt_num(e.bound),
                fmt_num(e.margin),
                e.verdict_label(),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "### {}\n", self.title);
        let _ = writeln!(out, "| check | bound | measured | margin | verdict |");
        let _ = writeln!(out, "|---|---|---|---|---|");
        for e in &self.entries {
            let name = match e.index {
                Some(i) => format!("{} [{}]", e.name, i),
                None => e.name.clone(),
            };
            let verdict = e.verdict_label();
            let _ = writeln!(
                out,
                "| {} `{}` | {} | {} | {} | {} |",
                name,
                e.anchor,
                fmt_num(e.bound),
                fmt_num(e.measured),
                fmt_num(e.margin),
                verdict
            );
        }
        out
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Shortest round-trip representation; stable across runs.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}
