//! Phase grading. Reads only the transcript: recorded segments, ISNs, the
//! scenario script and final states. Expected numbers are recomputed with
//! independent per-direction counters.

use serde::{Deserialize, Serialize};

use crate::cognitive::Verdict;
use crate::tcp::{Role, SeqNum, TcpFlags, TcpState};

use super::session::{Direction, SessionTranscript, TranscriptRecord};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhaseResult {
    Pass,
    Fail(String),
    #[default]
    NotGraded,
}

impl PhaseResult {
    pub fn passed(&self) -> bool {
        matches!(self, PhaseResult::Pass)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseResults {
    pub handshake: PhaseResult,
    pub data_transfer: PhaseResult,
    pub termination: PhaseResult,
}

impl PhaseResults {
    pub fn all_pass(&self) -> bool {
        self.handshake.passed() && self.data_transfer.passed() && self.termination.passed()
    }
}

/// Per-record expectations recomputed from the transcript.
struct Expect {
    /// Receiver's next expected sequence number at delivery time.
    seq: SeqNum,
    /// Acknowledgment the sender should have carried; `None` if it had heard nothing yet.
    ack: Option<SeqNum>,
}

fn expectations(t: &SessionTranscript) -> Vec<Expect> {
    let isn = |role: Role| match role {
        Role::Client => t.client_iss,
        Role::Server => t.server_iss,
    };
    let mut delivered = [0u32; 2];
    let idx = |d: Direction| match d {
        Direction::ClientToServer => 0,
        Direction::ServerToClient => 1,
    };
    t.records
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let from_peer = Direction::from_sender(rec.direction.receiver());
            let heard: u32 = t.records[..k]
                .iter()
                .filter(|r| r.direction == from_peer && r.step <= rec.sent_step)
                .map(|r| r.segment.consumes())
                .fold(0u32, u32::wrapping_add);
            let sender = rec.direction.sender();
            let e = Expect {
                seq: isn(sender).add(delivered[idx(rec.direction)]),
                ack: (heard > 0).then(|| isn(sender.peer()).add(heard)),
            };
            delivered[idx(rec.direction)] = delivered[idx(rec.direction)].wrapping_add(rec.segment.consumes());
            e
        })
        .collect()
}

fn ack_ok(rec: &TranscriptRecord, e: &Expect) -> bool {
    match e.ack {
        Some(ack) => rec.segment.flags().ack() && rec.segment.ack() == ack,
        None => !rec.segment.flags().ack(),
    }
}

fn acked_later(records: &[TranscriptRecord], k: usize) -> bool {
    let target = &records[k];
    let end = target.segment.end();
    records[k + 1..].iter().any(|r| {
        r.direction == Direction::from_sender(target.direction.receiver())
            && r.segment.flags().ack()
            && r.segment.ack() == end
    })
}

fn dir_name(d: Direction) -> &'static str {
    match d {
        Direction::ClientToServer => "C2S",
        Direction::ServerToClient => "S2C",
    }
}

fn halt_or(t: &SessionTranscript, fallback: &str) -> String {
    t.halt.as_ref().map(|h| h.describe()).unwrap_or_else(|| fallback.to_string())
}

pub fn grade(t: &SessionTranscript) -> PhaseResults {
    let exp = expectations(t);
    let handshake = grade_handshake(t);
    if !handshake.passed() {
        let downstream = PhaseResult::Fail("handshake failed".into());
        return PhaseResults { handshake, data_transfer: downstream.clone(), termination: downstream };
    }
    let term_start = t.records.iter().skip(3).position(|r| r.segment.flags().fin()).map_or(t.records.len(), |p| p + 3);
    PhaseResults {
        handshake,
        data_transfer: grade_data(t, &exp, term_start),
        termination: grade_termination(t, &exp, term_start),
    }
}

fn grade_handshake(t: &SessionTranscript) -> PhaseResult {
    let r = &t.records;
    let steps: [(Direction, TcpFlags, SeqNum, SeqNum, TcpState); 3] = [
        (Direction::ClientToServer, TcpFlags::SYN, t.client_iss, SeqNum::ZERO, TcpState::SynRcvd),
        (Direction::ServerToClient, TcpFlags::SYN_ACK, t.server_iss, t.client_iss.add(1), TcpState::Established),
        (Direction::ClientToServer, TcpFlags::ACK, t.client_iss.add(1), t.server_iss.add(1), TcpState::Established),
    ];
    for (i, (dir, flags, seq, ack, rx_state)) in steps.into_iter().enumerate() {
        let Some(rec) = r.get(i) else {
            return PhaseResult::Fail(halt_or(t, &format!("handshake incomplete after {i} segments")));
        };
        let n = i + 1;
        let seg = &rec.segment;
        if rec.direction != dir || seg.flags() != flags {
            return PhaseResult::Fail(format!(
                "wrong flags at step {n}: expected {} {flags}, got {} {}",
                dir_name(dir),
                dir_name(rec.direction),
                seg.flags()
            ));
        }
        if seg.seq() != seq || seg.ack() != ack || seg.payload_len() != 0 {
            return PhaseResult::Fail(format!(
                "wrong numbers at step {n}: expected seq={seq} ack={ack}, got seq={} ack={}",
                seg.seq(),
                seg.ack()
            ));
        }
        if rec.verdict != Some(Verdict::Normal) || rec.receiver_state != rx_state {
            return PhaseResult::Fail(format!(
                "receiver rejected step {n} ({:?}, state {})",
                rec.verdict, rec.receiver_state
            ));
        }
    }
    PhaseResult::Pass
}

fn grade_data(t: &SessionTranscript, exp: &[Expect], term_start: usize) -> PhaseResult {
    let script: Vec<(Direction, u32)> =
        t.scenario.data_script.iter().map(|d| (Direction::from_sender(d.side), d.payload_len)).collect();
    let mut seen = Vec::new();
    for k in 3..term_start {
        let rec = &t.records[k];
        let seg = &rec.segment;
        if rec.verdict != Some(Verdict::Normal) {
            return PhaseResult::Fail(format!("record {k} rejected by receiver ({:?})", rec.verdict));
        }
        if !ack_ok(rec, &exp[k]) {
            return PhaseResult::Fail(format!("record {k}: ack {} does not match bytes received", seg.ack()));
        }
        if seg.payload_len() == 0 {
            if seg.flags() != TcpFlags::ACK {
                return PhaseResult::Fail(format!("record {k}: unexpected flags {}", seg.flags()));
            }
            continue;
        }
        if seg.seq() != exp[k].seq {
            return PhaseResult::Fail(format!(
                "record {k}: data seq {} but receiver expected {}",
                seg.seq(),
                exp[k].seq
            ));
        }
        if !acked_later(&t.records, k) {
            return PhaseResult::Fail(format!("record {k}: data never acknowledged exactly"));
        }
        seen.push((rec.direction, seg.payload_len()));
    }
    if seen != script {
        if seen.len() < script.len() && t.halt.is_some() {
            return PhaseResult::Fail(halt_or(t, ""));
        }
        return PhaseResult::Fail(format!(
            "data script mismatch: expected {} segments, saw {}",
            script.len(),
            seen.len()
        ));
    }
    PhaseResult::Pass
}

fn grade_termination(t: &SessionTranscript, exp: &[Expect], term_start: usize) -> PhaseResult {
    let region = &t.records[term_start..];
    if region.is_empty() {
        return PhaseResult::Fail(halt_or(t, "no FIN observed"));
    }
    let closer = Direction::from_sender(t.scenario.closer);
    let peer = Direction::from_sender(t.scenario.closer.peer());
    let four_way = [(closer, TcpFlags::FIN_ACK), (peer, TcpFlags::ACK), (peer, TcpFlags::FIN_ACK), (closer, TcpFlags::ACK)];
    let piggyback = [(closer, TcpFlags::FIN_ACK), (peer, TcpFlags::FIN_ACK), (closer, TcpFlags::ACK)];
    let shape: Vec<(Direction, TcpFlags)> = region.iter().map(|r| (r.direction, r.segment.flags())).collect();
    if shape != four_way && shape != piggyback {
        if let Some(h) = &t.halt {
            return PhaseResult::Fail(h.describe());
        }
        let seen: Vec<String> = shape.iter().map(|(d, f)| format!("{} {f}", dir_name(*d))).collect();
        return PhaseResult::Fail(format!("unexpected close sequence: [{}]", seen.join(", ")));
    }
    for (off, rec) in region.iter().enumerate() {
        let k = term_start + off;
        if rec.verdict != Some(Verdict::Normal) {
            return PhaseResult::Fail(format!("record {k} rejected by receiver ({:?})", rec.verdict));
        }
        if rec.segment.seq() != exp[k].seq || rec.segment.payload_len() != 0 {
            return PhaseResult::Fail(format!("record {k}: seq {} but expected {}", rec.segment.seq(), exp[k].seq));
        }
        if !ack_ok(rec, &exp[k]) {
            return PhaseResult::Fail(format!("record {k}: ack {} does not match bytes received", rec.segment.ack()));
        }
        if rec.segment.flags().fin() && !acked_later(&t.records, k) {
            return PhaseResult::Fail(format!("record {k}: FIN never acknowledged"));
        }
    }
    if t.final_states.client != TcpState::Closed || t.final_states.server != TcpState::Closed {
        return PhaseResult::Fail(format!(
            "final states client={} server={}",
            t.final_states.client, t.final_states.server
        ));
    }
    PhaseResult::Pass
}
