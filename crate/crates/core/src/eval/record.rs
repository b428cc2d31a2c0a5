use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::alu::{alu_execute, AluResult};
use crate::cognitive::{parse_decision, CognitiveDecision, CognitiveInput};

/// What the core said: a valid decision or an unusable answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prediction {
    Decision(CognitiveDecision),
    Malformed { raw: String },
}

impl Prediction {
    pub fn decision(&self) -> Option<&CognitiveDecision> {
        match self {
            Prediction::Decision(d) => Some(d),
            Prediction::Malformed { .. } => None,
        }
    }

    pub fn is_malformed(&self) -> bool {
        matches!(self, Prediction::Malformed { .. })
    }

    /// Lenient reader: decision objects are validated, strings are parsed as raw model text.
    fn from_value(v: Value) -> Prediction {
        let raw = match v {
            Value::String(s) => s,
            Value::Object(ref m) if m.len() == 1 && m.contains_key("malformed") => {
                return Prediction::Malformed { raw: m["malformed"].as_str().unwrap_or_default().to_string() };
            }
            other => other.to_string(),
        };
        match parse_decision(&raw) {
            Ok(d) => Prediction::Decision(d),
            Err(_) => Prediction::Malformed { raw },
        }
    }

    fn to_value(&self) -> Value {
        match self {
            Prediction::Decision(d) => serde_json::to_value(d).expect("decision serializes"),
            Prediction::Malformed { raw } => serde_json::json!({ "malformed": raw }),
        }
    }
}

/// One scored step: the truth label, what the core predicted, and the numbers each implies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionRecord {
    pub provenance: Option<Value>,
    pub input: CognitiveInput,
    pub truth: CognitiveDecision,
    pub predicted: Prediction,
    pub truth_numbers: Option<AluResult>,
    pub predicted_numbers: Option<AluResult>,
}

fn numbers(d: &CognitiveDecision, input: &CognitiveInput) -> Option<AluResult> {
    if d.verdict.is_error() {
        return None;
    }
    alu_execute(d.t_task?, &input.state, input.received.as_ref()).ok()
}

impl PredictionRecord {
    /// Numbers are derived by running each decision's task through the ALU.
    pub fn new(input: CognitiveInput, truth: CognitiveDecision, predicted: Prediction) -> Self {
        let truth_numbers = numbers(&truth, &input);
        let predicted_numbers = predicted.decision().and_then(|d| numbers(d, &input));
        PredictionRecord { provenance: None, input, truth, predicted, truth_numbers, predicted_numbers }
    }

    pub fn with_provenance(mut self, provenance: Value) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn to_line(&self) -> String {
        let mut m = serde_json::Map::new();
        if let Some(p) = &self.provenance {
            m.insert("provenance".into(), p.clone());
        }
        m.insert("input".into(), serde_json::to_value(&self.input).expect("input serializes"));
        m.insert("truth".into(), serde_json::to_value(&self.truth).expect("decision serializes"));
        m.insert("predicted".into(), self.predicted.to_value());
        if let Some(n) = self.truth_numbers {
            m.insert("truth_numbers".into(), serde_json::to_value(n).expect("numbers serialize"));
        }
        if let Some(n) = self.predicted_numbers {
            m.insert("predicted_numbers".into(), serde_json::to_value(n).expect("numbers serialize"));
        }
        Value::Object(m).to_string()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    #[serde(default)]
    provenance: Option<Value>,
    input: CognitiveInput,
    truth: CognitiveDecision,
    #[serde(default)]
    predicted: Value,
    #[serde(default)]
    truth_numbers: Option<AluResult>,
    #[serde(default)]
    predicted_numbers: Option<AluResult>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnreadableLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct PredictionSet {
    pub records: Vec<PredictionRecord>,
    /// Lines whose input or truth could not be read; they cannot be scored.
    pub unreadable: Vec<UnreadableLine>,
}

#[derive(Debug, Error)]
pub enum PredictionIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads newline-delimited `{input, truth, predicted}` records.
///
/// A bad `predicted` value is kept as a MALFORMED prediction. Explicit
/// `*_numbers` fields override the ALU-derived ones.
pub fn read_predictions<R: BufRead>(r: R) -> Result<PredictionSet, PredictionIoError> {
    let mut set = PredictionSet::default();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RecordLine>(&line) {
            Ok(l) => {
                let mut rec = PredictionRecord::new(l.input, l.truth, Prediction::from_value(l.predicted));
                rec.provenance = l.provenance;
                if l.truth_numbers.is_some() {
                    rec.truth_numbers = l.truth_numbers;
                }
                if l.predicted_numbers.is_some() && !rec.predicted.is_malformed() {
                    rec.predicted_numbers = l.predicted_numbers;
                }
                set.records.push(rec);
            }
            Err(e) => set.unreadable.push(UnreadableLine { line: i + 1, reason: e.to_string() }),
        }
    }
    Ok(set)
}

pub fn load_predictions(path: &Path) -> Result<PredictionSet, PredictionIoError> {
    read_predictions(BufReader::new(File::open(path)?))
}

pub fn write_predictions<W: Write>(records: &[PredictionRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        w.write_all(r.to_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
