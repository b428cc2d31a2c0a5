//! Protocol domain types and 32-bit sequence arithmetic.

mod control;
mod flags;
mod segment;
mod seq;
mod state;

pub use control::{ActionKind, AgentState, LocalAction};
pub use flags::{flags_parse, flags_render, FlagsParseError, TcpFlags};
pub use segment::{segment_consumes, Payload, Segment};
pub use seq::{seq_add, seq_lt, SeqNum};
pub use state::{Role, TcpState, UnknownState};
