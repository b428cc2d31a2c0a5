use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::*;
use super::record::{PredictionRecord, PredictionSet, UnreadableLine};
use super::{pct1, pct2};
use crate::tcp::TcpState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReportFormat {
    #[default]
    TextTable,
    Machine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldAccuracy {
    pub seq: f64,
    pub ack: f64,
    pub flags: f64,
    pub new_state: f64,
    pub payload_len: f64,
}

/// Metrics over records whose truth is a NORMAL step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub records: usize,
    pub field_accuracy: FieldAccuracy,
    pub atomic_accuracy: f64,
    pub new_state: ClassMetrics,
    pub flags: ClassMetrics,
    pub confusion: ConfusionMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub records: usize,
    pub normal_records: usize,
    pub error_records: usize,
    pub malformed_predictions: usize,
    pub unreadable_lines: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub counts: Counts,
    pub malformed_rate: f64,
    pub steps: Option<StepMetrics>,
    pub error_detection: Option<ErrorDetection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unreadable: Vec<UnreadableLine>,
}

pub fn step_metrics(records: &[PredictionRecord]) -> Result<StepMetrics, EvalError> {
    let acc = |f| field_accuracy(records, f);
    Ok(StepMetrics {
        records: records.len(),
        field_accuracy: FieldAccuracy {
            seq: acc(Field::Seq)?,
            ack: acc(Field::Ack)?,
            flags: acc(Field::Flags)?,
            new_state: acc(Field::NewState)?,
            payload_len: acc(Field::PayloadLen)?,
        },
        atomic_accuracy: atomic_accuracy(records)?,
        new_state: precision_recall(records, ClassField::NewState)?,
        flags: precision_recall(records, ClassField::Flags)?,
        confusion: confusion_matrix(records)?,
    })
}

/// Step metrics cover NORMAL-truth records; error detection covers the rest.
pub fn build_report(set: &PredictionSet) -> Result<MetricsReport, EvalError> {
    let records = &set.records;
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let (errors, normal): (Vec<_>, Vec<_>) = records.iter().cloned().partition(|r| r.truth.verdict.is_error());
    let malformed = records.iter().filter(|r| r.predicted.is_malformed()).count();
    Ok(MetricsReport {
        counts: Counts {
            records: records.len(),
            normal_records: normal.len(),
            error_records: errors.len(),
            malformed_predictions: malformed,
            unreadable_lines: set.unreadable.len(),
        },
        malformed_rate: malformed as f64 / records.len() as f64,
        steps: if normal.is_empty() { None } else { Some(step_metrics(&normal)?) },
        error_detection: if errors.is_empty() { None } else { Some(error_detection_metrics(&errors)?) },
        unreadable: set.unreadable.clone(),
    })
}

fn abbrev(label: &str) -> &str {
    label.parse::<TcpState>().map_or(if label == MALFORMED { "MAL" } else { label }, |s| s.abbrev())
}

fn class_table(out: &mut String, title: &str, m: &ClassMetrics) {
    let _ = writeln!(out, "Precision / recall: {title}");
    let _ = writeln!(out, "  {:<14}{:>9}{:>11}{:>9}", "Class", "Support", "Precision", "Recall");
    for c in &m.classes {
        let p = if c.precision_undefined { "n/a".to_string() } else { pct2(c.precision) };
        let _ = writeln!(out, "  {:<14}{:>9}{:>11}{:>9}", c.label, c.support, p, pct2(c.recall));
    }
    let _ = writeln!(out, "  {:<14}{:>9}{:>11}{:>9}", "Macro avg", "", pct2(m.macro_precision), pct2(m.macro_recall));
}

pub fn render_text(r: &MetricsReport) -> String {
    let mut out = String::new();
    let c = &r.counts;
    let _ = writeln!(
        out,
        "Records: {} ({} normal, {} error), malformed predictions: {} ({}), unreadable lines: {}",
        c.records,
        c.normal_records,
        c.error_records,
        c.malformed_predictions,
        pct2(r.malformed_rate),
        c.unreadable_lines
    );
    if let Some(s) = &r.steps {
        let f = &s.field_accuracy;
        let _ = writeln!(out, "\nField-level accuracy (n={})", s.records);
        for (name, v) in [("Seq", f.seq), ("Ack", f.ack), ("Flags", f.flags), ("NewState", f.new_state), ("P_L", f.payload_len)] {
            let _ = writeln!(out, "  {name:<10}{:>9}", pct2(v));
        }
        let _ = writeln!(out, "  {:<10}{:>9}", "Atomic", pct2(s.atomic_accuracy));
        out.push('\n');
        class_table(&mut out, "NewState", &s.new_state);
        out.push('\n');
        class_table(&mut out, "Flags", &s.flags);

        let m = &s.confusion;
        let _ = writeln!(out, "\nConfusion matrix (row %, true \\ predicted)");
        let _ = write!(out, "  {:<6}", "");
        for col in &m.columns {
            let _ = write!(out, "{:>7}", abbrev(col));
        }
        out.push('\n');
        for (i, row) in m.rows.iter().enumerate() {
            let _ = write!(out, "  {:<6}", abbrev(row));
            for n in &m.counts[i] {
                let _ = write!(out, "{:>7}", pct1(*n as f64 / m.support[i] as f64));
            }
            out.push('\n');
        }
    }
    if let Some(e) = &r.error_detection {
        let _ = writeln!(out, "\nError detection (n={})", e.total);
        let _ = writeln!(out, "  {:<20}{:>7}", "Overall accuracy", pct1(e.overall_accuracy));
        let _ = writeln!(out, "  {:<20}{:>7}", "Order error recall", pct1(e.order_error.recall));
        let _ = writeln!(out, "  {:<20}{:>7}", "Flag error recall", pct1(e.flag_error.recall));
    }
    out
}

pub fn render_machine(r: &MetricsReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes")
}

pub fn read_machine(text: &str) -> serde_json::Result<MetricsReport> {
    serde_json::from_str(text)
}

pub fn emit_report(r: &MetricsReport, path: &Path, format: ReportFormat) -> std::io::Result<()> {
    let mut text = match format {
        ReportFormat::TextTable => render_text(r),
        ReportFormat::Machine => render_machine(r),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text)
}
