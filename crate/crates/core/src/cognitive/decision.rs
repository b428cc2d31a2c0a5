use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::alu::AluTask;
use crate::tcp::{AgentState, LocalAction, Segment, TcpFlags, TcpState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    #[default]
    Normal,
    OrderError,
    FlagError,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [Verdict::Normal, Verdict::OrderError, Verdict::FlagError];

    pub const fn as_str(self) -> &'static str {
        match self {
            Verdict::Normal => "NORMAL",
            Verdict::OrderError => "ORDER_ERROR",
            Verdict::FlagError => "FLAG_ERROR",
        }
    }

    pub const fn is_error(self) -> bool {
        !matches!(self, Verdict::Normal)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verdict::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown verdict `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cognitive input has no trigger: no received segment and no local action")]
pub struct InputError;

/// The `(S, R, A)` context handed to the decision core.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CognitiveInput {
    pub state: AgentState,
    pub received: Option<Segment>,
    pub action: LocalAction,
}

impl CognitiveInput {
    pub fn new(state: AgentState, received: Option<Segment>, action: LocalAction) -> Result<Self, InputError> {
        if received.is_none() && action.is_none() {
            return Err(InputError);
        }
        Ok(CognitiveInput { state, received, action })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("input serialization is infallible")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InputWire {
    state: AgentState,
    #[serde(deserialize_with = "required")]
    received: Option<Segment>,
    action: LocalAction,
}

impl<'de> Deserialize<'de> for CognitiveInput {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = InputWire::deserialize(deserializer)?;
        CognitiveInput::new(w.state, w.received, w.action).map_err(serde::de::Error::custom)
    }
}

/// Output of the decision core: `(S', F, P_L, T_task)` plus an error verdict.
///
/// `flags` is `None` when no segment is to be emitted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CognitiveDecision {
    pub next_state: TcpState,
    #[serde(deserialize_with = "required")]
    pub flags: Option<TcpFlags>,
    pub payload_len: u32,
    #[serde(deserialize_with = "required")]
    pub t_task: Option<AluTask>,
    pub verdict: Verdict,
}

fn required<'de, D, T>(deserializer: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(deserializer)
}

impl CognitiveDecision {
    /// Transition that emits a segment.
    pub fn reply(next_state: TcpState, flags: TcpFlags, payload_len: u32, task: AluTask) -> Self {
        CognitiveDecision { next_state, flags: Some(flags), payload_len, t_task: Some(task), verdict: Verdict::Normal }
    }

    /// Transition with nothing to send.
    pub fn silent(next_state: TcpState) -> Self {
        CognitiveDecision { next_state, flags: None, payload_len: 0, t_task: None, verdict: Verdict::Normal }
    }

    /// Rejection of the received segment; the state is kept.
    pub fn reject(current: TcpState, verdict: Verdict) -> Self {
        debug_assert!(verdict.is_error());
        CognitiveDecision { next_state: current, flags: None, payload_len: 0, t_task: None, verdict }
    }

    pub fn emits(&self) -> bool {
        self.verdict == Verdict::Normal && self.t_task.is_some()
    }

    /// Cross-field consistency beyond the wire types.
    pub fn check_consistency(&self) -> Result<(), String> {
        match self.verdict {
            Verdict::Normal => {
                if self.flags.is_some() != self.t_task.is_some() {
                    return Err("flags and t_task must be both present or both null".into());
                }
                if self.flags.is_none() && self.payload_len != 0 {
                    return Err("payload_len must be 0 when no segment is emitted".into());
                }
            }
            _ => {
                if self.t_task.is_some() {
                    return Err("t_task must be null for an error verdict".into());
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("decision serialization is infallible")
    }
}
