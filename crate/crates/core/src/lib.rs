//! A TCP endpoint whose control logic is delegated to a pluggable decision
//! core, with sequence/acknowledgment arithmetic done by a deterministic ALU.
//!
//! * [`tcp`] domain types and modular sequence arithmetic
//! * [`alu`] the `(seq, ack)` calculator
//! * [`cognitive`] the decision-core boundary: reference oracle, prompts, remote client
//! * [`runtime`] the agent loop, dual-agent sessions and trials
//! * [`dataset`] trace ingestion, flow extraction, label reconstruction, error samples, SFT output
//! * [`eval`] accuracy, precision/recall, confusion matrix and error-detection metrics

pub mod alu;
pub mod cognitive;
pub mod dataset;
pub mod eval;
pub mod par;
pub mod runtime;
pub mod tcp;

pub use alu::{alu_execute, AluResult, AluTask};
pub use cognitive::{CognitiveCore, CognitiveDecision, CognitiveInput, ReferenceOracle, Verdict};
pub use tcp::{AgentState, LocalAction, Role, Segment, SeqNum, TcpFlags, TcpState};
