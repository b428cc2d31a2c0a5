//! Deterministic TCP state machine used as the reference decision core.
//!
//! Besides regular transitions it classifies anomalous segments:
//! structurally illegal control bits are `FLAG_ERROR`, segments out of
//! sequence (or acknowledging unsent data, or without a transition in the
//! current state) are `ORDER_ERROR`. A rejected segment leaves the state
//! untouched and produces no reply.

use crate::alu::AluTask;
use crate::tcp::{AgentState, LocalAction, Segment, TcpFlags, TcpState};

use super::{CognitiveCore, CognitiveDecision, CognitiveInput, CoreError, Verdict};

/// Rule-based decision core.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReferenceOracle;

impl CognitiveCore for ReferenceOracle {
    fn decide(&self, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError> {
        Ok(oracle_transition(&input.state, input.received.as_ref(), &input.action))
    }

    fn name(&self) -> &str {
        "oracle"
    }
}

/// One transition of the reference state machine.
///
/// A received segment is handled first; a SEND or CLOSE supplied alongside it
/// is folded into the reply (data or FIN piggybacked on the ACK).
pub fn oracle_transition(s: &AgentState, r: Option<&Segment>, a: &LocalAction) -> CognitiveDecision {
    match r {
        None => on_action(s.state, a),
        Some(seg) => {
            let d = on_segment(s, seg);
            if d.verdict.is_error() || !matches!(a, LocalAction::Send(_) | LocalAction::Close) {
                return d;
            }
            let follow = on_action(d.next_state, a);
            if follow.emits() {
                follow
            } else {
                d
            }
        }
    }
}

fn on_action(state: TcpState, a: &LocalAction) -> CognitiveDecision {
    use TcpState::*;
    match (state, a) {
        (Closed, LocalAction::OpenActive) => CognitiveDecision::reply(SynSent, TcpFlags::SYN, 0, AluTask::InitSyn),
        (Closed, LocalAction::OpenPassive) => CognitiveDecision::silent(Listen),
        (Established | CloseWait, LocalAction::Send(data)) => {
            CognitiveDecision::reply(state, TcpFlags::PSH_ACK, data.len(), AluTask::CalculateSeqAck)
        }
        (Established, LocalAction::Close) => {
            CognitiveDecision::reply(FinWait1, TcpFlags::FIN_ACK, 0, AluTask::CalculateSeqAck)
        }
        (CloseWait, LocalAction::Close) => CognitiveDecision::reply(LastAck, TcpFlags::FIN_ACK, 0, AluTask::CalculateSeqAck),
        (Listen | SynSent, LocalAction::Close) => CognitiveDecision::silent(Closed),
        // not applicable here; the connection is unaffected
        _ => CognitiveDecision::silent(state),
    }
}

fn illegal_flags(state: TcpState, f: TcpFlags) -> bool {
    f.is_empty()
        || (f.syn() && f.fin())
        || (f.syn() && f.rst())
        || (state.is_synchronized() && f.syn())
        || (state.is_synchronized() && !f.ack() && !f.rst())
}

fn on_segment(s: &AgentState, r: &Segment) -> CognitiveDecision {
    use TcpState::*;
    let f = r.flags();
    let order_error = || CognitiveDecision::reject(s.state, Verdict::OrderError);
    if illegal_flags(s.state, f) {
        return CognitiveDecision::reject(s.state, Verdict::FlagError);
    }
    match s.state {
        Closed => order_error(),
        Listen => {
            if f.syn() && !f.ack() && !f.rst() && !f.fin() {
                CognitiveDecision::reply(SynRcvd, TcpFlags::SYN_ACK, 0, AluTask::CalculateSeqAck)
            } else {
                order_error()
            }
        }
        SynSent => {
            if f.ack() && r.ack() != s.snd_nxt {
                order_error()
            } else if f.rst() && f.ack() {
                CognitiveDecision::silent(Closed)
            } else if f.syn() && f.ack() && !f.fin() {
                CognitiveDecision::reply(Established, TcpFlags::ACK, 0, AluTask::CalculateAck)
            } else {
                order_error()
            }
        }
        SynRcvd => {
            if Some(r.seq()) != s.rcv_nxt || f.syn() {
                order_error()
            } else if f.rst() {
                CognitiveDecision::silent(Closed)
            } else if !f.ack() || r.ack() != s.snd_nxt {
                order_error()
            } else if r.consumes() > 0 {
                synchronized(Established, s, r)
            } else {
                CognitiveDecision::silent(Established)
            }
        }
        sync => synchronized(sync, s, r),
    }
}

fn synchronized(state: TcpState, s: &AgentState, r: &Segment) -> CognitiveDecision {
    use TcpState::*;
    let order_error = CognitiveDecision::reject(s.state, Verdict::OrderError);
    let f = r.flags();
    if Some(r.seq()) != s.rcv_nxt {
        return order_error;
    }
    if f.rst() {
        return CognitiveDecision::silent(Closed);
    }
    if s.snd_nxt.lt(r.ack()) {
        return order_error;
    }
    let our_fin_acked = r.ack() == s.snd_nxt;
    let has_data = r.payload_len() > 0;
    let ack_reply = |next| CognitiveDecision::reply(next, TcpFlags::ACK, 0, AluTask::CalculateAck);
    let ack_if_data = |next| if has_data { ack_reply(next) } else { CognitiveDecision::silent(next) };

    match state {
        Established if f.fin() => ack_reply(CloseWait),
        Established => ack_if_data(Established),
        FinWait1 if f.fin() => ack_reply(if our_fin_acked { TimeWait } else { Closing }),
        FinWait1 => ack_if_data(if our_fin_acked { FinWait2 } else { FinWait1 }),
        FinWait2 if f.fin() => ack_reply(TimeWait),
        FinWait2 => ack_if_data(FinWait2),
        // the peer has already finished its stream
        CloseWait | LastAck | Closing | TimeWait if has_data || f.fin() => order_error,
        LastAck if our_fin_acked => CognitiveDecision::silent(Closed),
        Closing if our_fin_acked => CognitiveDecision::silent(TimeWait),
        other => CognitiveDecision::silent(other),
    }
}
