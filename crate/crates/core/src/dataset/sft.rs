use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::reconstruct::LabeledSample;
use crate::cognitive::{CognitiveDecision, CognitiveInput, DEFAULT_PERSONA};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SftFormat {
    #[default]
    Pairs,
    Instruct,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairLine {
    input: CognitiveInput,
    label: CognitiveDecision,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstructLine {
    instruction: String,
    input: String,
    output: String,
}

#[derive(Debug, Error)]
pub enum SftError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// One line per sample, in input order.
pub fn write_sft<W: Write>(samples: &[LabeledSample], mut w: W, format: SftFormat) -> std::io::Result<()> {
    for s in samples {
        let line = match format {
            SftFormat::Pairs => serde_json::to_string(&PairLine { input: s.input.clone(), label: s.label.clone() }),
            SftFormat::Instruct => serde_json::to_string(&InstructLine {
                instruction: DEFAULT_PERSONA.to_string(),
                input: s.input.to_json(),
                output: s.label.to_json(),
            }),
        }
        .map_err(std::io::Error::other)?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn emit_sft(samples: &[LabeledSample], path: &Path, format: SftFormat) -> std::io::Result<()> {
    write_sft(samples, BufWriter::new(File::create(path)?), format)
}

/// Reads either SFT format back as `(input, label)` pairs.
pub fn read_sft<R: BufRead>(r: R) -> Result<Vec<(CognitiveInput, CognitiveDecision)>, SftError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| SftError::Malformed { line: i + 1, reason };
        if let Ok(p) = serde_json::from_str::<PairLine>(&line) {
            out.push((p.input, p.label));
            continue;
        }
        let ins: InstructLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let input = serde_json::from_str(&ins.input).map_err(|e| bad(format!("input: {e}")))?;
        let label = serde_json::from_str(&ins.output).map_err(|e| bad(format!("output: {e}")))?;
        out.push((input, label));
    }
    Ok(out)
}

pub fn load_sft(path: &Path) -> Result<Vec<(CognitiveInput, CognitiveDecision)>, SftError> {
    read_sft(BufReader::new(File::open(path)?))
}
