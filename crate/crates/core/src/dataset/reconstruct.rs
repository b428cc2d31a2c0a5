use std::collections::VecDeque;

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::errors::MutationKind;
use super::flow::Flow;
use crate::alu::{alu_execute, AluResult, AluTask};
use crate::cognitive::{oracle_transition, CognitiveDecision, CognitiveInput, ReferenceOracle};
use crate::par::{self, Execution};
use crate::runtime::{Agent, AgentEvent};
use crate::tcp::{AgentState, LocalAction, Role, Segment, TcpFlags};

/// Share of a flow's segments that may be skipped before the flow is dropped.
pub const MAX_SKIP_RATIO: f64 = 0.20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Flow { flow_id: usize, record_index: usize },
    Mutation { kind: MutationKind, flow_id: usize, record_index: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSample {
    pub input: CognitiveInput,
    pub label: CognitiveDecision,
    pub provenance: Provenance,
    /// `(seq, ack)` of the recorded segment, for samples taken from real flows.
    pub observed: Option<AluResult>,
}

impl LabeledSample {
    /// Numbers the label's task produces for this input, if it has one.
    pub fn label_numbers(&self) -> Option<AluResult> {
        let task = self.label.t_task?;
        alu_execute(task, &self.input.state, self.input.received.as_ref()).ok()
    }
}

/// A segment the receiver accepted, with enough context to mutate it later.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceiveContext {
    pub flow_id: usize,
    pub record_index: usize,
    /// Receiver memory just before the segment arrived.
    pub state: AgentState,
    pub segment: Segment,
    /// The sender's next recorded segment, if any.
    pub next_from_sender: Option<Segment>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SkipRecord {
    pub flow_id: usize,
    pub record_index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct ReconstructedFlow {
    pub flow_id: usize,
    pub samples: Vec<LabeledSample>,
    pub skipped: Vec<SkipRecord>,
    pub contexts: Vec<ReceiveContext>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("flow {0} is incomplete")]
    Incomplete(usize),
    #[error("flow {flow_id}: {skipped} of {total} segments contradict the oracle")]
    TooManySkipped { flow_id: usize, skipped: usize, total: usize, log: Vec<SkipRecord> },
}

fn slot(role: Role) -> usize {
    match role {
        Role::Client => 0,
        Role::Server => 1,
    }
}

/// T_task implied by the recorded segment.
fn rule_task(g: &Segment, first_syn: bool) -> AluTask {
    if first_syn {
        AluTask::InitSyn
    } else if g.consumes() > 0 {
        AluTask::CalculateSeqAck
    } else {
        AluTask::CalculateAck
    }
}

struct Replay<'c> {
    flow_id: usize,
    agents: [Agent<'c>; 2],
    /// Segments delivered to each side but not yet accounted for.
    pending: [VecDeque<(usize, Segment)>; 2],
    syn_sent: [bool; 2],
    fin_sent: [bool; 2],
    next_same_sender: Vec<Option<usize>>,
    out: ReconstructedFlow,
}

impl Replay<'_> {
    fn absorb(&mut self, side: usize, idx: usize, seg: Segment, flow: &Flow) {
        let state = self.agents[side].state().clone();
        match self.agents[side].step(AgentEvent::SegmentArrived(seg.clone())) {
            Ok(o) if !o.decision.verdict.is_error() => {
                self.push_context(idx, state, seg, flow);
                self.agents[side].expire_time_wait();
            }
            Ok(o) => debug!("flow {}: record {idx} rejected as {}", self.flow_id, o.decision.verdict),
            Err(e) => debug!("flow {}: record {idx} not absorbed: {e}", self.flow_id),
        }
    }

    fn push_context(&mut self, idx: usize, state: AgentState, segment: Segment, flow: &Flow) {
        let next_from_sender = self.next_same_sender[idx].map(|j| flow.records[j].segment.clone());
        self.out.contexts.push(ReceiveContext {
            flow_id: self.flow_id,
            record_index: idx,
            state,
            segment,
            next_from_sender,
        });
    }

    fn skip(&mut self, side: usize, idx: usize, g: &Segment, reason: String) {
        debug!("flow {}: skipping record {idx}: {reason}", self.flow_id);
        self.agents[side].resync_snd_nxt(g.end());
        self.out.skipped.push(SkipRecord { flow_id: self.flow_id, record_index: idx, reason });
    }

    fn outbound(&mut self, side: usize, idx: usize, g: &Segment, flow: &Flow) {
        let flags = g.flags();
        let first_syn = flags.syn() && !flags.ack() && !self.syn_sent[side];
        let first_fin = flags.fin() && !self.fin_sent[side];
        self.syn_sent[side] |= flags.syn();
        self.fin_sent[side] |= flags.fin();

        let action = if first_syn {
            LocalAction::OpenActive
        } else if let Some(a) = LocalAction::send_len(g.payload_len()) {
            a
        } else if first_fin {
            LocalAction::Close
        } else {
            LocalAction::None
        };

        // Everything G acknowledges has reached the sender; only the last may have prompted G.
        let mut covered = Vec::new();
        if flags.ack() {
            while let Some((_, p)) = self.pending[side].front() {
                if !p.end().le(g.ack()) {
                    break;
                }
                covered.push(self.pending[side].pop_front().expect("front exists"));
            }
        }
        let mut trigger: Option<(usize, Segment)> = None;
        for (j, p) in covered {
            let mut probe = self.agents[side].clone();
            if let Some((_, t)) = &trigger {
                let _ = probe.step(AgentEvent::SegmentArrived(t.clone()));
                probe.expire_time_wait();
            }
            let d = oracle_transition(probe.state(), Some(&p), &LocalAction::None);
            if d.verdict.is_error() {
                debug!("flow {}: record {j} rejected as {}", self.flow_id, d.verdict);
                continue;
            }
            if let Some((tj, t)) = trigger.take() {
                self.absorb(side, tj, t, flow);
            }
            if d.emits() {
                trigger = Some((j, p));
            } else {
                self.absorb(side, j, p, flow);
            }
        }

        let pre = self.agents[side].state().clone();
        let trigger_index = trigger.as_ref().map(|(j, _)| *j);
        let event = match (trigger, action) {
            (Some((_, r)), LocalAction::None) => AgentEvent::SegmentArrived(r),
            (Some((_, r)), a) => AgentEvent::SegmentWithAction(r, a),
            (None, LocalAction::None) => {
                return self.skip(side, idx, g, "no trigger explains this segment".into());
            }
            (None, a) => AgentEvent::LocalAction(a),
        };

        let outcome = match self.agents[side].step(event) {
            Ok(o) => o,
            Err(e) => return self.skip(side, idx, g, format!("step failed: {e}")),
        };
        if outcome.decision.verdict.is_error() {
            return self.skip(side, idx, g, format!("oracle verdict {}", outcome.decision.verdict));
        }
        let Some(emitted) = &outcome.emitted else {
            return self.skip(side, idx, g, "oracle stays silent".into());
        };
        if !emitted.same_header(g) {
            let reason = format!(
                "oracle emits seq={} ack={} {} len={}",
                emitted.seq(),
                emitted.ack(),
                emitted.flags(),
                emitted.payload_len()
            );
            return self.skip(side, idx, g, reason);
        }
        if outcome.decision.t_task != Some(rule_task(g, first_syn)) {
            return self.skip(side, idx, g, "task disagrees with segment shape".into());
        }
        if let (Some(j), Some(r)) = (trigger_index, outcome.input.received.clone()) {
            self.push_context(j, pre, r, flow);
        }
        self.agents[side].expire_time_wait();
        self.out.samples.push(LabeledSample {
            input: outcome.input,
            label: outcome.decision,
            provenance: Provenance::Flow { flow_id: self.flow_id, record_index: idx },
            observed: Some(AluResult { seq: g.seq(), ack: g.ack() }),
        });
    }
}

fn next_same_sender(flow: &Flow) -> Vec<Option<usize>> {
    let mut next = vec![None; flow.records.len()];
    for (i, rec) in flow.records.iter().enumerate() {
        next[i] = flow.records[i + 1..]
            .iter()
            .position(|r| r.five_tuple == rec.five_tuple)
            .map(|k| i + 1 + k);
    }
    next
}

/// Replays a complete flow through the reference oracle, labeling every segment it can explain.
pub fn reconstruct_labels(flow: &Flow) -> Result<ReconstructedFlow, ReconstructError> {
    if !flow.is_complete() {
        return Err(ReconstructError::Incomplete(flow.flow_id));
    }
    let client_iss = flow.records[0].segment.seq();
    let server_iss = flow
        .records
        .iter()
        .find(|r| flow.role_of(r) == Role::Server && r.segment.flags().contains(TcpFlags::SYN_ACK))
        .map(|r| r.segment.seq())
        .ok_or(ReconstructError::Incomplete(flow.flow_id))?;

    let oracle = ReferenceOracle;
    let mut replay = Replay {
        flow_id: flow.flow_id,
        agents: [Agent::new(&oracle, Role::Client, client_iss), Agent::new(&oracle, Role::Server, server_iss)],
        pending: [VecDeque::new(), VecDeque::new()],
        syn_sent: [false; 2],
        fin_sent: [false; 2],
        next_same_sender: next_same_sender(flow),
        out: ReconstructedFlow { flow_id: flow.flow_id, ..Default::default() },
    };
    replay.agents[1]
        .step(AgentEvent::LocalAction(LocalAction::OpenPassive))
        .expect("oracle accepts a passive open");

    for (idx, rec) in flow.records.iter().enumerate() {
        let side = slot(flow.role_of(rec));
        replay.outbound(side, idx, &rec.segment, flow);
        replay.pending[1 - side].push_back((idx, rec.segment.clone()));
    }

    let total = flow.records.len();
    let skipped = replay.out.skipped.len();
    if skipped as f64 > MAX_SKIP_RATIO * total as f64 {
        return Err(ReconstructError::TooManySkipped { flow_id: flow.flow_id, skipped, total, log: replay.out.skipped });
    }
    Ok(replay.out)
}

/// Reconstructs every complete flow; incomplete ones are left out.
pub fn reconstruct_flows(flows: &[Flow], exec: Execution) -> Vec<Result<ReconstructedFlow, ReconstructError>> {
    let complete: Vec<&Flow> = flows.iter().filter(|f| f.is_complete()).collect();
    par::map(exec, &complete, |f| reconstruct_labels(f))
}
