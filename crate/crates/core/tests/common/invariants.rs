//! Module invariants as plain check functions, shared by the proptest suite
//! and the acceptance run.

use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::sample::SizeRange;
use proptest::test_runner::TestCaseError;
use smart_tcp::alu::{alu_execute, AluResult, AluTask};
use smart_tcp::cognitive::{CognitiveDecision, ReferenceOracle, Verdict};
use smart_tcp::dataset::{extract_flows, generate_error_dataset, oracle_agrees, reconstruct_labels, LabeledSample, ReceiveContext};
use smart_tcp::eval::*;
use smart_tcp::runtime::{run_session_with, CloseMode, Direction, IsnRange, Scenario, SessionOptions, SessionTranscript};
use smart_tcp::tcp::{flags_parse, seq_add, seq_lt, Payload, Segment};
use smart_tcp::{AgentState, Role, SeqNum, TcpFlags, TcpState};

use super::{capture, oracle_sessions, oracle_samples, scenario};

pub type Check = Result<(), TestCaseError>;

pub const CASES: u32 = 10_000;
const MOD: u64 = 1 << 32;

pub fn config() -> ProptestConfig {
    ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() }
}

pub fn role() -> impl Strategy<Value = Role> {
    prop_oneof![Just(Role::Client), Just(Role::Server)]
}

pub fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (
        proptest::collection::vec((role(), 1u32..4000), SizeRange::from(0..6)),
        role(),
        prop_oneof![Just(CloseMode::FourWay), Just(CloseMode::Piggyback)],
    )
        .prop_map(|(data, closer, mode)| scenario(&data, closer, mode))
}

pub fn isn_strategy() -> impl Strategy<Value = IsnRange> {
    prop_oneof![Just(IsnRange::default()), Just(IsnRange::new(u32::MAX - 3000, u32::MAX).unwrap())]
}

pub fn picks_strategy() -> impl Strategy<Value = Vec<(usize, u8)>> {
    proptest::collection::vec((0usize..1000, 0u8..7), SizeRange::from(1..40))
}

fn session(sc: &Scenario, seed: u64, isn: IsnRange) -> SessionTranscript {
    let opts = SessionOptions { isn, ..Default::default() };
    run_session_with(&ReferenceOracle, &ReferenceOracle, sc, seed, &opts)
}

pub fn wide_seq(a: u32, n: u64) -> u32 {
    ((u64::from(a) + n) % MOD) as u32
}

pub fn serial_arithmetic(a: u32, x: u32, y: u32) -> Check {
    let s = SeqNum(a);
    prop_assert_eq!(seq_add(seq_add(s, x), y), seq_add(s, x.wrapping_add(y)));
    prop_assert_eq!(seq_add(seq_add(s, x), y).get(), wide_seq(a, u64::from(x) + u64::from(y)));
    let d = (i64::from(y) - i64::from(a)).rem_euclid(MOD as i64);
    prop_assert_eq!(seq_lt(s, SeqNum(y)), d > 0 && d < (1 << 31));
    prop_assert!(!(seq_lt(s, SeqNum(y)) && seq_lt(SeqNum(y), s)));
    Ok(())
}

pub fn flag_round_trip(bits: u8, rot: usize, upper: bool) -> Check {
    let f = TcpFlags::from_bits_truncate(bits);
    prop_assume!(!f.is_empty());
    let mut tokens: Vec<String> = f.render().split('|').map(str::to_string).collect();
    let n = tokens.len();
    tokens.rotate_left(rot % n);
    let text = tokens.join("|");
    let text = if upper { text } else { text.to_lowercase() };
    prop_assert_eq!(flags_parse(&text).unwrap(), f);
    prop_assert_eq!(flags_parse(&f.render()).unwrap().render(), f.render());
    Ok(())
}

pub fn alu_reference(iss: u32, snd: u32, rcv: u32, rseq: u32, len: u32, bits: u8) -> Check {
    let state = AgentState {
        role: Role::Client,
        state: TcpState::Established,
        iss: SeqNum(iss),
        irs: Some(SeqNum(rcv)),
        snd_nxt: SeqNum(snd),
        rcv_nxt: Some(SeqNum(rcv)),
    };
    let flags = TcpFlags::from_bits_truncate(bits);
    let r = Segment::new(SeqNum(rseq), SeqNum(0), flags, Payload::Elided(len));
    let consumed = u64::from(len) + u64::from(flags.syn()) + u64::from(flags.fin());
    let want = AluResult { seq: SeqNum(snd), ack: SeqNum(wide_seq(rseq, consumed)) };
    prop_assert_eq!(alu_execute(AluTask::CalculateSeqAck, &state, Some(&r)).unwrap(), want);
    prop_assert_eq!(alu_execute(AluTask::CalculateAck, &state, Some(&r)).unwrap(), want);
    prop_assert_eq!(alu_execute(AluTask::CalculateAck, &state, None).unwrap(), AluResult { seq: SeqNum(snd), ack: SeqNum(rcv) });
    prop_assert_eq!(alu_execute(AluTask::InitSyn, &state, None).unwrap(), AluResult { seq: SeqNum(iss), ack: SeqNum(0) });
    Ok(())
}

/// Every emitted seq/ack equals ISN plus the bytes counted independently per direction.
pub fn ack_conservation(sc: &Scenario, seed: u64, isn: IsnRange) -> Check {
    let t = session(sc, seed, isn);
    prop_assert!(t.phase_results.all_pass(), "{:?}", t.phase_results);
    let isn_of = |d: Direction| match d {
        Direction::ClientToServer => t.client_iss,
        Direction::ServerToClient => t.server_iss,
    };
    for g in &t.records {
        let sent_by_me: u64 = t
            .records
            .iter()
            .filter(|s| s.direction == g.direction && s.sent_step < g.sent_step)
            .map(|s| u64::from(s.segment.consumes()))
            .sum();
        prop_assert_eq!(g.segment.seq().get(), wide_seq(isn_of(g.direction).get(), sent_by_me));
        if g.segment.flags().ack() {
            let heard: u64 = t
                .records
                .iter()
                .filter(|s| s.direction != g.direction && s.step <= g.sent_step)
                .map(|s| u64::from(s.segment.consumes()))
                .sum();
            let peer = match g.direction {
                Direction::ClientToServer => Direction::ServerToClient,
                Direction::ServerToClient => Direction::ClientToServer,
            };
            prop_assert_eq!(g.segment.ack().get(), wide_seq(isn_of(peer).get(), heard));
        }
    }
    Ok(())
}

pub fn transcript_determinism(sc: &Scenario, seed: u64) -> Check {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    session(sc, seed, IsnRange::default()).write_jsonl(&mut a).unwrap();
    session(sc, seed, IsnRange::default()).write_jsonl(&mut b).unwrap();
    prop_assert_eq!(a, b);
    Ok(())
}

pub fn reconstruction_round_trip(sc: &Scenario, seed: u64, isn: IsnRange) -> Check {
    let t = session(sc, seed, isn);
    let flows = extract_flows(&capture(std::slice::from_ref(&t)));
    prop_assert_eq!(flows.len(), 1);
    let rec = reconstruct_labels(&flows[0]).unwrap();
    prop_assert!(rec.skipped.is_empty());
    prop_assert_eq!(rec.samples.len(), t.records.len());
    for (s, live) in rec.samples.iter().zip(&t.records) {
        prop_assert_eq!(&s.label, &live.decision);
        prop_assert_eq!(s.label_numbers(), s.observed);
    }
    Ok(())
}

pub fn mutation_soundness(count: usize, ratio: f64, seed: u64) -> Check {
    let set = generate_error_dataset(contexts(), count, ratio, seed).unwrap();
    prop_assert_eq!(set.len(), count);
    let order = set.iter().filter(|s| s.label.verdict == Verdict::OrderError).count();
    prop_assert_eq!(order, (count as f64 * ratio).round() as usize);
    for s in &set {
        prop_assert!(oracle_agrees(s));
    }
    Ok(())
}

/// Atomic accuracy never exceeds a field accuracy; micro recall, the matrix
/// diagonal and record order agree with each other.
pub fn atomic_bound(picks: &[(usize, u8)], rot: usize) -> Check {
    let pool = samples();
    let mut recs: Vec<PredictionRecord> = picks.iter().map(|&(i, how)| perturb(&pool[i % pool.len()], how)).collect();
    let atomic = atomic_accuracy(&recs).unwrap();
    let accs: Vec<f64> = Field::ALL.iter().map(|&f| field_accuracy(&recs, f).unwrap()).collect();
    prop_assert!(accs.iter().all(|&a| atomic <= a));

    let pr = precision_recall(&recs, ClassField::NewState).unwrap();
    let tp: usize = pr.classes.iter().map(|c| c.true_positives).sum();
    prop_assert_eq!(tp as f64 / recs.len() as f64, accs[3]);
    let cm = confusion_matrix(&recs).unwrap();
    for (i, row) in cm.rows.iter().enumerate() {
        prop_assert_eq!(cm.counts[i].iter().sum::<usize>(), cm.support[i]);
        let recall = pr.classes.iter().find(|c| &c.label == row).unwrap().recall;
        prop_assert_eq!(cm.rate(row, row).unwrap(), recall);
    }

    let before = build_report(&PredictionSet { records: recs.clone(), unreadable: vec![] }).unwrap();
    let n = recs.len();
    recs.rotate_left(rot % n);
    let after = build_report(&PredictionSet { records: recs, unreadable: vec![] }).unwrap();
    prop_assert_eq!(before, after);
    Ok(())
}

fn contexts() -> &'static [ReceiveContext] {
    static CTX: OnceLock<Vec<ReceiveContext>> = OnceLock::new();
    CTX.get_or_init(|| {
        let live = oracle_sessions(&Scenario::default(), 0..5);
        extract_flows(&capture(&live)).iter().flat_map(|f| reconstruct_labels(f).unwrap().contexts).collect()
    })
}

fn samples() -> &'static [LabeledSample] {
    static S: OnceLock<Vec<LabeledSample>> = OnceLock::new();
    S.get_or_init(|| oracle_samples(3))
}

fn perturb(s: &LabeledSample, how: u8) -> PredictionRecord {
    let mut d: CognitiveDecision = s.label.clone();
    let truth = |p| PredictionRecord::new(s.input.clone(), s.label.clone(), p);
    match how {
        0 => return truth(Prediction::Malformed { raw: String::new() }),
        1 => d.next_state = if d.next_state == TcpState::Closed { TcpState::Listen } else { TcpState::Closed },
        2 if d.flags.is_some() => d.flags = Some(TcpFlags::RST | TcpFlags::ACK),
        3 if d.t_task.is_some() => d.payload_len += 1,
        4 => {
            let mut r = truth(Prediction::Decision(d));
            r.predicted_numbers = r.predicted_numbers.map(|n| AluResult { seq: n.seq.add(1), ack: n.ack });
            return r;
        }
        5 => {
            let mut r = truth(Prediction::Decision(d));
            r.predicted_numbers = r.predicted_numbers.map(|n| AluResult { seq: n.seq, ack: n.ack.add(7) });
            return r;
        }
        _ => {}
    }
    truth(Prediction::Decision(d))
}
