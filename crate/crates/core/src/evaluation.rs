//! Accuracy against gold entity translations, per category and overall.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::category::Category;
use crate::knowledge_base::normalize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRecord {
    pub english: String,
    pub category: Category,
    pub gold_hindi: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold set is empty")]
    EmptyGold,
    #[error("{gold} gold records but {system} system outputs")]
    LengthMismatch { gold: usize, system: usize },
    #[error("line {line}: expected english<TAB>category<TAB>gold_hindi")]
    BadGoldLine { line: usize },
    #[error("line {line}: {message}")]
    BadCategory { line: usize, message: String },
}

/// Parses `english<TAB>category<TAB>gold_hindi` lines; blank and `#` lines
/// are skipped.
pub fn parse_gold(text: &str) -> Result<Vec<GoldRecord>, EvalError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        let [english, category, gold] = cols[..] else {
            return Err(EvalError::BadGoldLine { line });
        };
        if english.trim().is_empty() || gold.trim().is_empty() {
            return Err(EvalError::BadGoldLine { line });
        }
        let category = category
            .parse()
            .map_err(
                |e: crate::category::UnknownCategory| EvalError::BadCategory {
                    line,
                    message: e.to_string(),
                },
            )?;
        out.push(GoldRecord {
            english: english.to_string(),
            category,
            gold_hindi: gold.to_string(),
        });
    }
    Ok(out)
}

/// One output per line; an empty line is an empty output.
pub fn parse_system(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.trim_end_matches('\r').to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyRow {
    pub label: String,
    pub total: u64,
    pub correct: u64,
    /// Accuracy in units of 1e-5, truncated.
    pub accuracy_e5: u64,
}

impl AccuracyRow {
    pub fn new(label: impl Into<String>, total: u64, correct: u64) -> Self {
        assert!(
            total > 0 && correct <= total,
            "invalid counts {correct}/{total}"
        );
        AccuracyRow {
            label: label.into(),
            total,
            correct,
            accuracy_e5: correct * 100_000 / total,
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy_e5 as f64 / 100_000.0
    }

    pub fn accuracy_text(&self) -> String {
        format!(
            "{}.{:05}",
            self.accuracy_e5 / 100_000,
            self.accuracy_e5 % 100_000
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyReport {
    /// Categories present in the gold set, in PER, LOC, ORG order.
    pub categories: Vec<AccuracyRow>,
    pub aggregate: AccuracyRow,
}

impl AccuracyReport {
    /// Builds a report from `(category, total, correct)` counts.
    pub fn from_counts(counts: &[(Category, u64, u64)]) -> Result<Self, EvalError> {
        let mut rows = Vec::new();
        let (mut total, mut correct) = (0, 0);
        for cat in Category::ALL {
            let (t, c) = counts
                .iter()
                .filter(|(k, _, _)| *k == cat)
                .fold((0, 0), |(t, c), (_, dt, dc)| (t + dt, c + dc));
            if t > 0 {
                rows.push(AccuracyRow::new(cat.label(), t, c));
                total += t;
                correct += c;
            }
        }
        if total == 0 {
            return Err(EvalError::EmptyGold);
        }
        let label = if rows.len() == Category::ALL.len() {
            "All Three"
        } else {
            "All"
        };
        Ok(AccuracyReport {
            categories: rows,
            aggregate: AccuracyRow::new(label, total, correct),
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = &AccuracyRow> {
        self.categories
            .iter()
            .chain(std::iter::once(&self.aggregate))
    }
}

pub fn evaluate(gold: &[GoldRecord], system: &[String]) -> Result<AccuracyReport, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    if gold.len() != system.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            system: system.len(),
        });
    }
    let mut counts: Vec<(Category, u64, u64)> = Category::ALL.iter().map(|&c| (c, 0, 0)).collect();
    for (g, out) in gold.iter().zip(system) {
        let slot = counts
            .iter_mut()
            .find(|(c, _, _)| *c == g.category)
            .expect("known category");
        slot.1 += 1;
        if normalize(out) == normalize(&g.gold_hindi) {
            slot.2 += 1;
        }
    }
    AccuracyReport::from_counts(&counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Tsv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "tsv" => Ok(ReportFormat::Tsv),
            other => Err(format!(
                "unknown report format {other:?} (expected text|tsv)"
            )),
        }
    }
}

const HEADER: [&str; 4] = ["Name Entities", "Total", "Correct", "Accuracy"];

pub fn render_report(report: &AccuracyReport, format: ReportFormat) -> String {
    let body: Vec<[String; 4]> = report
        .rows()
        .map(|r| {
            [
                r.label.clone(),
                r.total.to_string(),
                r.correct.to_string(),
                r.accuracy_text(),
            ]
        })
        .collect();
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            out.push_str(&HEADER.join("\t"));
            out.push('\n');
            for row in &body {
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
        }
        ReportFormat::Text => {
            let mut widths = HEADER.map(|h| h.chars().count());
            for row in &body {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.chars().count());
                }
            }
            let header = HEADER.map(String::from);
            for row in std::iter::once(&header).chain(&body) {
                let _ = write!(out, "{:<w$}", row[0], w = widths[0]);
                for (cell, w) in row[1..].iter().zip(&widths[1..]) {
                    let _ = write!(out, "  {cell:>w$}");
                }
                out.push('\n');
            }
        }
    }
    out
}
