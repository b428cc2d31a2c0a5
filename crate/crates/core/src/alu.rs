//! Deterministic sequence/acknowledgment calculator invoked by the decision core.
//!
//! The decision core never produces numbers itself; it names one of the
//! [`AluTask`]s and the ALU derives `(seq, ack)` from the agent state and the
//! received segment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tcp::{AgentState, Segment, SeqNum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AluTask {
    /// First SYN of an active open: `(iss, 0)`.
    InitSyn,
    /// Reply that consumes no sequence space.
    CalculateAck,
    /// Reply that consumes sequence space (SYN|ACK, data, FIN).
    CalculateSeqAck,
}

impl AluTask {
    pub const ALL: [AluTask; 3] = [AluTask::InitSyn, AluTask::CalculateAck, AluTask::CalculateSeqAck];

    pub const fn as_str(self) -> &'static str {
        match self {
            AluTask::InitSyn => "INIT_SYN",
            AluTask::CalculateAck => "CALCULATE_ACK",
            AluTask::CalculateSeqAck => "CALCULATE_SEQ_ACK",
        }
    }
}

impl fmt::Display for AluTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AluTask {
    type Err = AluError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        alu_parse_task(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AluError {
    #[error("unknown ALU task `{0}`")]
    UnknownTask(String),
    #[error("{0} takes no received segment")]
    UnexpectedSegment(AluTask),
    #[error("{0} needs a received segment or a known rcv_nxt")]
    MissingAckSource(AluTask),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AluResult {
    pub seq: SeqNum,
    pub ack: SeqNum,
}

/// Case-sensitive match of the task vocabulary.
pub fn alu_parse_task(token: &str) -> Result<AluTask, AluError> {
    AluTask::ALL
        .into_iter()
        .find(|t| t.as_str() == token)
        .ok_or_else(|| AluError::UnknownTask(token.to_string()))
}

/// Computes `(seq, ack)` for the segment about to be assembled.
///
/// Without a received segment (replies to a local SEND or CLOSE) the
/// acknowledgment falls back to `rcv_nxt`.
pub fn alu_execute(task: AluTask, s: &AgentState, r: Option<&Segment>) -> Result<AluResult, AluError> {
    match task {
        AluTask::InitSyn => match r {
            Some(_) => Err(AluError::UnexpectedSegment(task)),
            None => Ok(AluResult { seq: s.iss, ack: SeqNum::ZERO }),
        },
        AluTask::CalculateAck | AluTask::CalculateSeqAck => {
            let ack = match r {
                Some(r) => r.seq().add(r.consumes()),
                None => s.rcv_nxt.ok_or(AluError::MissingAckSource(task))?,
            };
            Ok(AluResult { seq: s.snd_nxt, ack })
        }
    }
}
