use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Payload, Role, SeqNum, TcpState};

/// The agent's memory: its role, FSM state and sequence-space bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentState {
    pub role: Role,
    pub state: TcpState,
    /// Own initial sequence number.
    pub iss: SeqNum,
    /// Peer's initial sequence number, once learned.
    pub irs: Option<SeqNum>,
    pub snd_nxt: SeqNum,
    pub rcv_nxt: Option<SeqNum>,
}

impl AgentState {
    /// Fresh CLOSED endpoint with the given ISN.
    pub fn closed(role: Role, iss: SeqNum) -> Self {
        AgentState { role, state: TcpState::Closed, iss, irs: None, snd_nxt: iss, rcv_nxt: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    OpenActive,
    OpenPassive,
    Send,
    Close,
    None,
}

/// A request from the local application.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum LocalAction {
    #[default]
    None,
    OpenActive,
    OpenPassive,
    /// Data to transmit; never empty.
    Send(Payload),
    Close,
}

impl LocalAction {
    /// SEND with concrete bytes. Returns `None` for empty data.
    pub fn send(data: impl Into<Vec<u8>>) -> Option<Self> {
        let data = data.into();
        (!data.is_empty()).then_some(LocalAction::Send(Payload::Bytes(data)))
    }

    /// SEND whose bytes are known only by length.
    pub fn send_len(len: u32) -> Option<Self> {
        (len > 0).then_some(LocalAction::Send(Payload::Elided(len)))
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            LocalAction::None => ActionKind::None,
            LocalAction::OpenActive => ActionKind::OpenActive,
            LocalAction::OpenPassive => ActionKind::OpenPassive,
            LocalAction::Send(_) => ActionKind::Send,
            LocalAction::Close => ActionKind::Close,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, LocalAction::None)
    }

    pub fn data_len(&self) -> u32 {
        match self {
            LocalAction::Send(p) => p.len(),
            _ => 0,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionWire {
    kind: ActionKind,
    data_len: u32,
}

impl Serialize for LocalAction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ActionWire { kind: self.kind(), data_len: self.data_len() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LocalAction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let w = ActionWire::deserialize(deserializer)?;
        let action = match w.kind {
            ActionKind::Send => {
                return LocalAction::send_len(w.data_len)
                    .ok_or_else(|| D::Error::custom("SEND action requires data_len > 0"));
            }
            ActionKind::OpenActive => LocalAction::OpenActive,
            ActionKind::OpenPassive => LocalAction::OpenPassive,
            ActionKind::Close => LocalAction::Close,
            ActionKind::None => LocalAction::None,
        };
        if w.data_len != 0 {
            return Err(D::Error::custom("data_len must be 0 for non-SEND actions"));
        }
        Ok(action)
    }
}
