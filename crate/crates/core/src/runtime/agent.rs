use thiserror::Error;

use crate::alu::{alu_execute, AluError, AluResult};
use crate::cognitive::{CognitiveCore, CognitiveDecision, CognitiveInput, CoreError, InputError};
use crate::tcp::{AgentState, LocalAction, Payload, Role, Segment, SeqNum, TcpState};

/// What wakes an agent up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentEvent {
    SegmentArrived(Segment),
    LocalAction(LocalAction),
    /// A segment arriving while the application has a request pending
    /// (used for piggybacked close).
    SegmentWithAction(Segment, LocalAction),
}

impl AgentEvent {
    fn into_parts(self) -> (Option<Segment>, LocalAction) {
        match self {
            AgentEvent::SegmentArrived(s) => (Some(s), LocalAction::None),
            AgentEvent::LocalAction(a) => (None, a),
            AgentEvent::SegmentWithAction(s, a) => (Some(s), a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("ALU: {0}")]
    Alu(#[from] AluError),
    #[error("decision payload_len {got} does not match the {expected} bytes available")]
    PayloadMismatch { expected: u32, got: u32 },
    #[error("inconsistent decision: {0}")]
    Inconsistent(String),
}

/// Result of one pass through the aggregate / decide+compute / assemble+update loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub input: CognitiveInput,
    pub decision: CognitiveDecision,
    pub alu_result: Option<AluResult>,
    pub emitted: Option<Segment>,
    /// Agent memory after the update.
    pub state: AgentState,
}

/// One TCP endpoint: its memory plus the decision core that drives it.
#[derive(Clone)]
pub struct Agent<'c> {
    core: &'c dyn CognitiveCore,
    state: AgentState,
}

impl<'c> Agent<'c> {
    pub fn new(core: &'c dyn CognitiveCore, role: Role, iss: SeqNum) -> Self {
        Agent { core, state: AgentState::closed(role, iss) }
    }

    pub fn with_state(core: &'c dyn CognitiveCore, state: AgentState) -> Self {
        Agent { core, state }
    }

    pub fn state(&self) -> &AgentState {
        &self.state
    }

    pub fn role(&self) -> Role {
        self.state.role
    }

    pub fn step(&mut self, event: AgentEvent) -> Result<StepOutcome, StepError> {
        agent_step(self, event)
    }

    /// Simulated 2MSL expiry: TIME_WAIT collapses to CLOSED.
    pub fn expire_time_wait(&mut self) -> bool {
        if self.state.state == TcpState::TimeWait {
            self.state.state = TcpState::Closed;
            true
        } else {
            false
        }
    }

    /// Overrides the send position; used when replaying recorded flows.
    pub(crate) fn resync_snd_nxt(&mut self, snd_nxt: SeqNum) {
        self.state.snd_nxt = snd_nxt;
    }
}

pub fn agent_step(agent: &mut Agent<'_>, event: AgentEvent) -> Result<StepOutcome, StepError> {
    // context aggregation
    let (received, action) = event.into_parts();
    let input = CognitiveInput::new(agent.state.clone(), received, action)?;

    // reasoning
    let decision = agent.core.decide(&input)?;
    if decision.verdict.is_error() {
        return Ok(StepOutcome { input, decision, alu_result: None, emitted: None, state: agent.state.clone() });
    }

    // computation and segment assembly
    let (alu_result, emitted) = match decision.t_task {
        Some(task) => {
            let flags = decision
                .flags
                .ok_or_else(|| StepError::Inconsistent("t_task present without flags".into()))?;
            let alu = alu_execute(task, &agent.state, input.received.as_ref())?;
            let payload = match &input.action {
                LocalAction::Send(data) if decision.payload_len == data.len() => data.clone(),
                LocalAction::Send(data) => {
                    return Err(StepError::PayloadMismatch { expected: data.len(), got: decision.payload_len })
                }
                _ if decision.payload_len == 0 => Payload::EMPTY,
                _ => return Err(StepError::PayloadMismatch { expected: 0, got: decision.payload_len }),
            };
            (Some(alu), Some(Segment::new(alu.seq, alu.ack, flags, payload)))
        }
        None if decision.flags.is_some() => {
            return Err(StepError::Inconsistent("flags present without t_task".into()));
        }
        None => (None, None),
    };

    // state update
    let st = &mut agent.state;
    if let Some(r) = &input.received {
        if r.flags().syn() {
            st.irs = Some(r.seq());
        }
        st.rcv_nxt = Some(r.end());
    }
    if let Some(g) = &emitted {
        st.snd_nxt = g.end();
    }
    st.state = decision.next_state;

    Ok(StepOutcome { input, decision, alu_result, emitted, state: agent.state.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cognitive::{ReferenceOracle, Verdict};
    use crate::tcp::TcpFlags;

    #[test]
    fn active_open_emits_syn() {
        let core = ReferenceOracle;
        let mut client = Agent::new(&core, Role::Client, SeqNum(3_000_000_000));
        let out = client.step(AgentEvent::LocalAction(LocalAction::OpenActive)).unwrap();
        let syn = out.emitted.unwrap();
        assert_eq!(syn, Segment::control(3_000_000_000u32, 0u32, TcpFlags::SYN));
        assert_eq!(client.state().snd_nxt, SeqNum(3_000_000_001));
        assert_eq!(client.state().state, TcpState::SynSent);
    }

    #[test]
    fn handshake_completion_is_silent() {
        let core = ReferenceOracle;
        let mut client = Agent::new(&core, Role::Client, SeqNum(8_388_608));
        let mut server = Agent::new(&core, Role::Server, SeqNum(4_294_967_295));
        server.step(AgentEvent::LocalAction(LocalAction::OpenPassive)).unwrap();
        let syn = client.step(AgentEvent::LocalAction(LocalAction::OpenActive)).unwrap().emitted.unwrap();
        let syn_ack = server.step(AgentEvent::SegmentArrived(syn)).unwrap().emitted.unwrap();
        assert_eq!(syn_ack.ack(), SeqNum(8_388_609));
        let ack = client.step(AgentEvent::SegmentArrived(syn_ack)).unwrap().emitted.unwrap();
        assert_eq!(ack.ack(), SeqNum(0), "server ISN 2^32-1 wraps to 0");
        let out = server.step(AgentEvent::SegmentArrived(ack)).unwrap();
        assert!(out.emitted.is_none());
        assert_eq!(server.state().state, TcpState::Established);
    }

    #[test]
    fn flag_error_keeps_state() {
        let core = ReferenceOracle;
        let st = AgentState {
            role: Role::Client,
            state: TcpState::Established,
            iss: SeqNum(10),
            irs: Some(SeqNum(50)),
            snd_nxt: SeqNum(11),
            rcv_nxt: Some(SeqNum(51)),
        };
        let mut a = Agent::with_state(&core, st.clone());
        let out = a.step(AgentEvent::SegmentArrived(Segment::control(51u32, 11u32, TcpFlags::SYN))).unwrap();
        assert_eq!(out.decision.verdict, Verdict::FlagError);
        assert!(out.emitted.is_none());
        assert_eq!(a.state(), &st);
    }

    #[test]
    fn send_payload_comes_from_action() {
        let core = ReferenceOracle;
        let st = AgentState {
            role: Role::Client,
            state: TcpState::Established,
            iss: SeqNum(10),
            irs: Some(SeqNum(50)),
            snd_nxt: SeqNum(11),
            rcv_nxt: Some(SeqNum(51)),
        };
        let mut a = Agent::with_state(&core, st);
        let out = a.step(AgentEvent::LocalAction(LocalAction::send(b"hello".to_vec()).unwrap())).unwrap();
        let g = out.emitted.unwrap();
        assert_eq!(g.payload().bytes(), Some(&b"hello"[..]));
        assert_eq!((g.seq(), g.ack()), (SeqNum(11), SeqNum(51)));
        assert_eq!(a.state().snd_nxt, SeqNum(16));
    }
}
