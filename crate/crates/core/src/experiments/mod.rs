//! Theorem-level drivers.
//!
//! Every driver returns an [`ExperimentReport`]: a table of per-item rows and
//! a verdict that can be recomputed from those rows.

mod comb;
mod doubling_ball;
mod equivalence;
mod example;
mod rhi;
mod stopping;
mod tolerances;

pub use comb::{
    a_infty_stability_scan, classify_ratios, convergence_study, counterexample_scan, expect_diverging, square_ratios, ConvergencePoint,
};
pub use doubling_ball::doubling_ball_search;
pub use equivalence::equivalence_scan;
pub use example::exponential_example;
pub use rhi::{gehring_probe, verify_sharp_lemma, verify_weak_rhi};
pub use stopping::{check_stopping_family, stopping_cubes, stopping_scan, StoppingCheck, StoppingFamily};
pub use tolerances::Tolerances;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Diverging,
    Bounded,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Diverging => "diverging",
            Verdict::Bounded => "bounded",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Pass, diverging and bounded are all successful classifications.
    pub fn is_success(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::Diverging | Verdict::Bounded)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => write!(f, "{}", fmt_num(*v)),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

/// 17 significant digits, `inf`/`nan` spelled out.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub verdict: Verdict,
    /// Structural constants and headline numbers (S, K, ε*, …).
    pub summary: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub witness: Option<String>,
    /// Wall-clock time; not part of the CSV.
    pub runtime_ms: f64,
}

impl ExperimentReport {
    pub(crate) fn new(name: &str, columns: &[&str]) -> Self {
        ExperimentReport {
            name: name.to_string(),
            parameters: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            verdict: Verdict::Pass,
            summary: Vec::new(),
            notes: Vec::new(),
            witness: None,
            runtime_ms: 0.0,
        }
    }

    pub(crate) fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.push((key.to_string(), value.to_string()));
    }

    pub(crate) fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub(crate) fn stat(&mut self, key: &str, value: f64) {
        self.summary.push((key.to_string(), value));
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (integers widened).
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .filter_map(|r| match &r[i] {
                Cell::Num(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }

    /// Verdict of an inequality suite: pass iff every row's `ok` column is 1.
    pub fn verdict_from_ok(&self) -> Verdict {
        let ok = self.numbers("ok");
        if ok.iter().all(|&v| v == 1.0) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Header plus rows; numbers at full precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}
