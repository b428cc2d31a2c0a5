use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::PredictionRecord;
use crate::cognitive::Verdict;
use crate::tcp::TcpState;

pub const MALFORMED: &str = "MALFORMED";
/// Flags label for steps that emit nothing.
pub const NO_FLAGS: &str = "NONE";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no records to evaluate")]
    Empty,
    #[error("unknown field `{0}` (expected Seq, Ack, Flags, NewState or P_L)")]
    UnknownField(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    Seq,
    Ack,
    Flags,
    NewState,
    PayloadLen,
}

impl Field {
    pub const ALL: [Field; 5] = [Field::Seq, Field::Ack, Field::Flags, Field::NewState, Field::PayloadLen];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Seq => "Seq",
            Field::Ack => "Ack",
            Field::Flags => "Flags",
            Field::NewState => "NewState",
            Field::PayloadLen => "P_L",
        }
    }

    /// MALFORMED predictions never match.
    pub fn matches(self, r: &PredictionRecord) -> bool {
        let Some(p) = r.predicted.decision() else {
            return false;
        };
        match self {
            Field::Seq => r.predicted_numbers.map(|n| n.seq) == r.truth_numbers.map(|n| n.seq),
            Field::Ack => r.predicted_numbers.map(|n| n.ack) == r.truth_numbers.map(|n| n.ack),
            Field::Flags => p.flags == r.truth.flags,
            Field::NewState => p.next_state == r.truth.next_state,
            Field::PayloadLen => p.payload_len == r.truth.payload_len,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Field {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, EvalError> {
        let norm: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_ascii_lowercase();
        Ok(match norm.as_str() {
            "seq" => Field::Seq,
            "ack" => Field::Ack,
            "flags" => Field::Flags,
            "newstate" | "state" => Field::NewState,
            "pl" | "payloadlen" => Field::PayloadLen,
            _ => return Err(EvalError::UnknownField(s.to_string())),
        })
    }
}

fn rate(num: usize, den: usize) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

pub fn field_accuracy(records: &[PredictionRecord], field: Field) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(rate(records.iter().filter(|r| field.matches(r)).count(), records.len()))
}

/// Fraction of records correct on every field at once.
pub fn atomic_accuracy(records: &[PredictionRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = records.iter().filter(|r| Field::ALL.iter().all(|f| f.matches(r))).count();
    Ok(rate(hits, records.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassField {
    NewState,
    Flags,
}

fn state_label(s: TcpState) -> String {
    s.as_str().to_string()
}

fn class_labels(r: &PredictionRecord, field: ClassField) -> (String, String) {
    match field {
        ClassField::NewState => (
            state_label(r.truth.next_state),
            r.predicted.decision().map_or(MALFORMED.to_string(), |d| state_label(d.next_state)),
        ),
        ClassField::Flags => {
            let label = |f: Option<crate::tcp::TcpFlags>| f.map_or(NO_FLAGS.to_string(), |f| f.render());
            (label(r.truth.flags), r.predicted.decision().map_or(MALFORMED.to_string(), |d| label(d.flags)))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: String,
    pub support: usize,
    pub predicted: usize,
    pub true_positives: usize,
    pub precision: f64,
    pub recall: f64,
    /// Set when nothing was predicted as this class; precision is then reported as 0.
    pub precision_undefined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub field: ClassField,
    pub classes: Vec<ClassScore>,
    /// Averages over classes with nonzero support.
    pub macro_precision: f64,
    pub macro_recall: f64,
}

fn label_rank(field: ClassField, label: &str) -> (usize, String) {
    let pos = match field {
        ClassField::NewState => TcpState::ALL.iter().position(|s| s.as_str() == label),
        ClassField::Flags => None,
    };
    let pos = pos.unwrap_or(if label == MALFORMED { usize::MAX } else { usize::MAX - 1 });
    (pos, label.to_string())
}

/// One-vs-rest precision and recall per class.
pub fn precision_recall(records: &[PredictionRecord], field: ClassField) -> Result<ClassMetrics, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let pairs: Vec<(String, String)> = records.iter().map(|r| class_labels(r, field)).collect();
    let mut labels: Vec<String> = pairs.iter().flat_map(|(t, p)| [t.clone(), p.clone()]).collect();
    labels.sort_by_key(|l| label_rank(field, l));
    labels.dedup();

    let classes: Vec<ClassScore> = labels
        .into_iter()
        .map(|label| {
            let support = pairs.iter().filter(|(t, _)| *t == label).count();
            let predicted = pairs.iter().filter(|(_, p)| *p == label).count();
            let true_positives = pairs.iter().filter(|(t, p)| *t == label && *p == label).count();
            ClassScore {
                precision: rate(true_positives, predicted),
                recall: rate(true_positives, support),
                precision_undefined: predicted == 0,
                label,
                support,
                predicted,
                true_positives,
            }
        })
        .collect();
    let supported: Vec<&ClassScore> = classes.iter().filter(|c| c.support > 0).collect();
    let n = supported.len() as f64;
    Ok(ClassMetrics {
        field,
        macro_precision: supported.iter().map(|c| c.precision).sum::<f64>() / n,
        macro_recall: supported.iter().map(|c| c.recall).sum::<f64>() / n,
        classes,
    })
}

/// Rows are true states with nonzero support; columns are every label seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub counts: Vec<Vec<usize>>,
    pub support: Vec<usize>,
}

impl ConfusionMatrix {
    /// Share of row `truth` predicted as `predicted`, in `[0, 1]`.
    pub fn rate(&self, truth: &str, predicted: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == truth)?;
        let j = self.columns.iter().position(|c| c == predicted)?;
        Some(rate(self.counts[i][j], self.support[i]))
    }

    /// Same as [`rate`](Self::rate), as a percentage with one decimal.
    pub fn cell(&self, truth: &str, predicted: &str) -> Option<String> {
        self.rate(truth, predicted).map(super::pct1)
    }
}

pub fn confusion_matrix(records: &[PredictionRecord]) -> Result<ConfusionMatrix, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let pairs: Vec<(String, String)> = records.iter().map(|r| class_labels(r, ClassField::NewState)).collect();
    let mut rows: Vec<String> = pairs.iter().map(|(t, _)| t.clone()).collect();
    rows.sort_by_key(|l| label_rank(ClassField::NewState, l));
    rows.dedup();
    let mut columns: Vec<String> = pairs.iter().flat_map(|(t, p)| [t.clone(), p.clone()]).collect();
    columns.sort_by_key(|l| label_rank(ClassField::NewState, l));
    columns.dedup();

    let mut counts = vec![vec![0usize; columns.len()]; rows.len()];
    for (t, p) in &pairs {
        let i = rows.iter().position(|r| r == t).expect("row listed");
        let j = columns.iter().position(|c| c == p).expect("column listed");
        counts[i][j] += 1;
    }
    let support = counts.iter().map(|row| row.iter().sum()).collect();
    Ok(ConfusionMatrix { rows, columns, counts, support })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryRecall {
    pub verdict: Verdict,
    pub actual: usize,
    pub detected: usize,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetection {
    pub total: usize,
    pub correct: usize,
    pub overall_accuracy: f64,
    pub order_error: CategoryRecall,
    pub flag_error: CategoryRecall,
}

/// Verdict accuracy and per-category recall. NORMAL or MALFORMED on an error sample is a miss.
pub fn error_detection_metrics(records: &[PredictionRecord]) -> Result<ErrorDetection, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let hit = |r: &PredictionRecord| r.predicted.decision().is_some_and(|d| d.verdict == r.truth.verdict);
    let category = |v: Verdict| {
        let actual = records.iter().filter(|r| r.truth.verdict == v).count();
        let detected = records.iter().filter(|r| r.truth.verdict == v && hit(r)).count();
        CategoryRecall { verdict: v, actual, detected, recall: rate(detected, actual) }
    };
    let correct = records.iter().filter(|r| hit(r)).count();
    Ok(ErrorDetection {
        total: records.len(),
        correct,
        overall_accuracy: rate(correct, records.len()),
        order_error: category(Verdict::OrderError),
        flag_error: category(Verdict::FlagError),
    })
}
