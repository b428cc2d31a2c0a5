use serde::{Deserialize, Serialize};

use crate::tcp::{AgentState, LocalAction, Payload, Role, Segment, SeqNum, TcpFlags, TcpState};

use super::{oracle_transition, CognitiveDecision, CognitiveInput};

pub const DEFAULT_PERSONA: &str = include_str!("../../assets/persona.txt");

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PromptMode {
    /// A fine-tuned model needs no in-context examples.
    FineTuned,
    /// Baseline models get worked examples to pin the output format.
    FewShot(Vec<(CognitiveInput, CognitiveDecision)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptConfig {
    pub persona: String,
    pub mode: PromptMode,
}

impl PromptConfig {
    pub fn fine_tuned() -> Self {
        PromptConfig { persona: DEFAULT_PERSONA.to_string(), mode: PromptMode::FineTuned }
    }

    pub fn few_shot(n: usize) -> Self {
        PromptConfig { persona: DEFAULT_PERSONA.to_string(), mode: PromptMode::FewShot(default_few_shot(n)) }
    }
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self::fine_tuned()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    fn new(role: &str, content: impl Into<String>) -> Self {
        ChatMessage { role: role.to_string(), content: content.into() }
    }
}

/// Fully serialized prompt: persona, worked examples, and the live input object.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PromptBundle {
    pub system_persona: String,
    pub few_shot_examples: Vec<(String, String)>,
    pub input_object: String,
}

impl PromptBundle {
    /// Chat transcript: system persona, alternating user/assistant examples, final user turn.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut out = Vec::with_capacity(2 + 2 * self.few_shot_examples.len());
        out.push(ChatMessage::new("system", self.system_persona.trim_end()));
        for (input, output) in &self.few_shot_examples {
            out.push(ChatMessage::new("user", input.clone()));
            out.push(ChatMessage::new("assistant", output.clone()));
        }
        out.push(ChatMessage::new("user", self.input_object.clone()));
        out
    }
}

pub fn build_prompt(input: &CognitiveInput, config: &PromptConfig) -> PromptBundle {
    let few_shot_examples = match &config.mode {
        PromptMode::FineTuned => Vec::new(),
        PromptMode::FewShot(pairs) => pairs.iter().map(|(i, d)| (i.to_json(), d.to_json())).collect(),
    };
    PromptBundle { system_persona: config.persona.clone(), few_shot_examples, input_object: input.to_json() }
}

/// Up to `n` worked examples spanning handshake, data transfer, termination and one rejected segment.
pub fn default_few_shot(n: usize) -> Vec<(CognitiveInput, CognitiveDecision)> {
    let client_iss = SeqNum(2_837_451_902);
    let server_iss = SeqNum(19_455_311);
    let mut listen = AgentState::closed(Role::Server, server_iss);
    listen.state = TcpState::Listen;
    let established = AgentState {
        role: Role::Client,
        state: TcpState::Established,
        iss: client_iss,
        irs: Some(server_iss),
        snd_nxt: client_iss.add(1),
        rcv_nxt: Some(server_iss.add(1)),
    };
    let syn_sent = AgentState { state: TcpState::SynSent, irs: None, rcv_nxt: None, ..established.clone() };
    let data = Segment::new(server_iss.add(1), client_iss.add(1), TcpFlags::PSH_ACK, Payload::Elided(512));
    let fin_wait_2 = AgentState { state: TcpState::FinWait2, snd_nxt: client_iss.add(2), ..established.clone() };

    let cases: Vec<(AgentState, Option<Segment>, LocalAction)> = vec![
        (AgentState::closed(Role::Client, client_iss), None, LocalAction::OpenActive),
        (listen, Some(Segment::control(client_iss, 0u32, TcpFlags::SYN)), LocalAction::None),
        (syn_sent, Some(Segment::control(server_iss, client_iss.add(1), TcpFlags::SYN_ACK)), LocalAction::None),
        (established.clone(), Some(data), LocalAction::None),
        (established.clone(), None, LocalAction::Close),
        (fin_wait_2, Some(Segment::control(server_iss.add(1), client_iss.add(2), TcpFlags::FIN_ACK)), LocalAction::None),
        (established.clone(), Some(Segment::control(server_iss.add(1), client_iss.add(1), TcpFlags::SYN | TcpFlags::FIN)), LocalAction::None),
    ];
    cases
        .into_iter()
        .take(n)
        .map(|(s, r, a)| {
            let d = oracle_transition(&s, r.as_ref(), &a);
            (CognitiveInput::new(s, r, a).expect("examples carry a trigger"), d)
        })
        .collect()
}
