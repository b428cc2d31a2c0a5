//! Dual-agent session over a lossless, ordered in-memory channel.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alu::AluResult;
use crate::cognitive::{CognitiveCore, CognitiveDecision, CognitiveInput, CoreError, Verdict};
use crate::tcp::{LocalAction, Role, Segment, SeqNum, TcpState};

use super::fault::{FaultInjector, FaultSpec};
use super::grading::{grade, PhaseResults};
use super::scenario::{CloseMode, Scenario};
use super::{Agent, AgentEvent, StepError, StepOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "C2S")]
    ClientToServer,
    #[serde(rename = "S2C")]
    ServerToClient,
}

impl Direction {
    pub const fn from_sender(role: Role) -> Self {
        match role {
            Role::Client => Direction::ClientToServer,
            Role::Server => Direction::ServerToClient,
        }
    }

    pub const fn sender(self) -> Role {
        match self {
            Direction::ClientToServer => Role::Client,
            Direction::ServerToClient => Role::Server,
        }
    }

    pub const fn receiver(self) -> Role {
        self.sender().peer()
    }
}

/// Inclusive ISN draw range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsnRange {
    pub min: u32,
    pub max: u32,
}

impl IsnRange {
    pub fn new(min: u32, max: u32) -> Result<Self, String> {
        if min >= max {
            return Err(format!("ISN range needs min < max, got [{min}, {max}]"));
        }
        Ok(IsnRange { min, max })
    }
}

impl Default for IsnRange {
    fn default() -> Self {
        IsnRange { min: 1 << 23, max: u32::MAX }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SessionOptions {
    pub isn: IsnRange,
    pub fault: FaultSpec,
}

/// One delivered segment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    /// Step at which the receiver processed the segment.
    pub step: u32,
    /// Step in which the sender emitted it.
    pub sent_step: u32,
    pub direction: Direction,
    pub segment: Segment,
    /// Sender's context and decision that produced the segment.
    pub input: CognitiveInput,
    pub decision: CognitiveDecision,
    pub alu_result: Option<AluResult>,
    /// Receiver's verdict; null when the receiver's step failed.
    pub verdict: Option<Verdict>,
    pub receiver_state: TcpState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Halt {
    Verdict { role: Role, verdict: Verdict, step: u32 },
    StepFailure { role: Role, step: u32, message: String },
    Transport { role: Role, step: u32, message: String },
    Timeout { step: u32 },
}

impl Halt {
    pub fn describe(&self) -> String {
        match self {
            Halt::Verdict { role, verdict, step } => format!("{role} reported {verdict} at step {step}"),
            Halt::StepFailure { role, step, message } => format!("{role} step {step} failed: {message}"),
            Halt::Transport { role, step, message } => format!("{role} step {step} transport failure: {message}"),
            Halt::Timeout { step } => format!("timeout after {step} steps"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalStates {
    pub client: TcpState,
    pub server: TcpState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub scenario: Scenario,
    pub rng_seed: u64,
    /// Range the ISNs were drawn from; replaying `rng_seed` needs it.
    pub isn_range: IsnRange,
    pub client_iss: SeqNum,
    pub server_iss: SeqNum,
    pub records: Vec<TranscriptRecord>,
    pub final_states: FinalStates,
    pub steps: u32,
    pub halt: Option<Halt>,
    pub fault: FaultSpec,
    pub fault_applied: bool,
    pub phase_results: PhaseResults,
}

#[derive(Serialize, Deserialize)]
struct Trailer {
    scenario: Scenario,
    rng_seed: u64,
    #[serde(default)]
    isn_range: IsnRange,
    client_iss: SeqNum,
    server_iss: SeqNum,
    final_states: FinalStates,
    steps: u32,
    halt: Option<Halt>,
    fault: FaultSpec,
    fault_applied: bool,
    phase_results: PhaseResults,
}

#[derive(Serialize, Deserialize)]
struct TrailerLine {
    trailer: Trailer,
}

#[derive(Debug, Error)]
pub enum TranscriptIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("transcript has no trailer line")]
    MissingTrailer,
}

impl SessionTranscript {
    pub fn scenario_id(&self) -> &str {
        &self.scenario.id
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.records.iter().map(|r| r.segment.clone()).collect()
    }

    /// Newline-delimited records followed by a `{"trailer": ...}` line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in &self.records {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        let trailer = TrailerLine {
            trailer: Trailer {
                scenario: self.scenario.clone(),
                rng_seed: self.rng_seed,
                isn_range: self.isn_range,
                client_iss: self.client_iss,
                server_iss: self.server_iss,
                final_states: self.final_states,
                steps: self.steps,
                halt: self.halt.clone(),
                fault: self.fault.clone(),
                fault_applied: self.fault_applied,
                phase_results: self.phase_results.clone(),
            },
        };
        serde_json::to_writer(&mut w, &trailer)?;
        w.write_all(b"\n")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, TranscriptIoError> {
        let mut records = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |source| TranscriptIoError::Parse { line: i + 1, source };
            if line.trim_start().starts_with("{\"trailer\"") {
                let t = serde_json::from_str::<TrailerLine>(&line).map_err(parse_err)?.trailer;
                return Ok(SessionTranscript {
                    scenario: t.scenario,
                    rng_seed: t.rng_seed,
                    isn_range: t.isn_range,
                    client_iss: t.client_iss,
                    server_iss: t.server_iss,
                    records,
                    final_states: t.final_states,
                    steps: t.steps,
                    halt: t.halt,
                    fault: t.fault,
                    fault_applied: t.fault_applied,
                    phase_results: t.phase_results,
                });
            }
            records.push(serde_json::from_str(&line).map_err(parse_err)?);
        }
        Err(TranscriptIoError::MissingTrailer)
    }
}

struct InFlight {
    sent_step: u32,
    direction: Direction,
    segment: Segment,
    input: CognitiveInput,
    decision: CognitiveDecision,
    alu_result: Option<AluResult>,
}

struct Driver<'c> {
    client: Agent<'c>,
    server: Agent<'c>,
    fifo: VecDeque<InFlight>,
    injector: FaultInjector<InFlight>,
    emitted: usize,
    steps: u32,
    budget: u32,
    records: Vec<TranscriptRecord>,
    /// Per role: close as soon as the peer's FIN arrives.
    close_on_fin: [bool; 2],
}

const fn slot(role: Role) -> usize {
    match role {
        Role::Client => 0,
        Role::Server => 1,
    }
}

impl<'c> Driver<'c> {
    fn agent(&mut self, role: Role) -> &mut Agent<'c> {
        match role {
            Role::Client => &mut self.client,
            Role::Server => &mut self.server,
        }
    }

    fn budget_left(&self) -> Result<(), Halt> {
        if self.steps >= self.budget {
            Err(Halt::Timeout { step: self.steps })
        } else {
            Ok(())
        }
    }

    fn step(&mut self, role: Role, event: AgentEvent) -> Result<StepOutcome, Halt> {
        self.steps += 1;
        let step = self.steps;
        let agent = self.agent(role);
        let out = agent.step(event).map_err(|e| match e {
            StepError::Core(CoreError::Transport(message)) => Halt::Transport { role, step, message },
            other => Halt::StepFailure { role, step, message: other.to_string() },
        })?;
        agent.expire_time_wait();
        if let Some(segment) = &out.emitted {
            let item = InFlight {
                sent_step: step,
                direction: Direction::from_sender(role),
                segment: segment.clone(),
                input: out.input.clone(),
                decision: out.decision.clone(),
                alu_result: out.alu_result,
            };
            let index = self.emitted;
            self.emitted += 1;
            for it in self.injector.on_emit(index, item, |x| &mut x.segment) {
                self.fifo.push_back(it);
            }
        }
        Ok(out)
    }

    fn act(&mut self, role: Role, action: LocalAction) -> Result<(), Halt> {
        self.budget_left()?;
        self.step(role, AgentEvent::LocalAction(action)).map(drop)
    }

    fn pump(&mut self) -> Result<(), Halt> {
        loop {
            if self.fifo.is_empty() {
                match self.injector.release() {
                    Some(held) => self.fifo.push_back(held),
                    None => return Ok(()),
                }
            }
            self.budget_left()?;
            let item = self.fifo.pop_front().expect("non-empty");
            let receiver = item.direction.receiver();
            let event = if item.segment.flags().fin() && std::mem::take(&mut self.close_on_fin[slot(receiver)]) {
                AgentEvent::SegmentWithAction(item.segment.clone(), LocalAction::Close)
            } else {
                AgentEvent::SegmentArrived(item.segment.clone())
            };
            let result = self.step(receiver, event);
            let receiver_state = self.agent(receiver).state().state;
            self.records.push(TranscriptRecord {
                step: self.steps,
                sent_step: item.sent_step,
                direction: item.direction,
                segment: item.segment,
                input: item.input,
                decision: item.decision,
                alu_result: item.alu_result,
                verdict: result.as_ref().ok().map(|o| o.decision.verdict),
                receiver_state,
            });
            let out = result?;
            if out.decision.verdict.is_error() {
                return Err(Halt::Verdict { role: receiver, verdict: out.decision.verdict, step: self.steps });
            }
        }
    }

    fn run(&mut self, scenario: &Scenario, payloads: &[Vec<u8>]) -> Result<(), Halt> {
        self.act(Role::Server, LocalAction::OpenPassive)?;
        self.act(Role::Client, LocalAction::OpenActive)?;
        self.pump()?;

        let mut i = 0;
        while i < scenario.data_script.len() {
            let side = scenario.data_script[i].side;
            while i < scenario.data_script.len() && scenario.data_script[i].side == side {
                let action = LocalAction::send(payloads[i].clone()).expect("validated non-empty");
                self.act(side, action)?;
                i += 1;
            }
            self.pump()?;
        }

        let closer = scenario.closer;
        match scenario.close_mode {
            CloseMode::FourWay => {
                self.act(closer, LocalAction::Close)?;
                self.pump()?;
                self.act(closer.peer(), LocalAction::Close)?;
                self.pump()
            }
            CloseMode::Piggyback => {
                self.close_on_fin[slot(closer.peer())] = true;
                self.act(closer, LocalAction::Close)?;
                self.pump()
            }
        }
    }
}

pub fn run_session(
    client_core: &dyn CognitiveCore,
    server_core: &dyn CognitiveCore,
    scenario: &Scenario,
    seed: u64,
) -> SessionTranscript {
    run_session_with(client_core, server_core, scenario, seed, &SessionOptions::default())
}

/// Runs one full-lifecycle session. ISNs and payload bytes are drawn from `seed`.
pub fn run_session_with(
    client_core: &dyn CognitiveCore,
    server_core: &dyn CognitiveCore,
    scenario: &Scenario,
    seed: u64,
    opts: &SessionOptions,
) -> SessionTranscript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let client_iss = SeqNum(rng.random_range(opts.isn.min..=opts.isn.max));
    let server_iss = SeqNum(rng.random_range(opts.isn.min..=opts.isn.max));
    let payloads: Vec<Vec<u8>> = scenario
        .data_script
        .iter()
        .map(|d| {
            let mut buf = vec![0u8; d.payload_len as usize];
            rng.fill(&mut buf[..]);
            buf
        })
        .collect();

    let mut driver = Driver {
        client: Agent::new(client_core, Role::Client, client_iss),
        server: Agent::new(server_core, Role::Server, server_iss),
        fifo: VecDeque::new(),
        injector: FaultInjector::new(opts.fault.clone()),
        emitted: 0,
        steps: 0,
        budget: scenario.steps_budget,
        records: Vec::new(),
        close_on_fin: [false; 2],
    };
    let halt = driver.run(scenario, &payloads).err();

    let mut transcript = SessionTranscript {
        scenario: scenario.clone(),
        rng_seed: seed,
        isn_range: opts.isn,
        client_iss,
        server_iss,
        final_states: FinalStates { client: driver.client.state().state, server: driver.server.state().state },
        steps: driver.steps,
        halt,
        fault: driver.injector.spec().clone(),
        fault_applied: driver.injector.applied(),
        records: driver.records,
        phase_results: PhaseResults::default(),
    };
    transcript.phase_results = grade(&transcript);
    transcript
}
