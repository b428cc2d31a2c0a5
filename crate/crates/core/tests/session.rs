mod common;

use std::time::Instant;

use common::*;
use smart_tcp::cognitive::{oracle_transition, CognitiveCore, CognitiveDecision, CognitiveInput, CoreError, ReferenceOracle, Verdict};
use smart_tcp::par::Execution;
use smart_tcp::runtime::*;
use smart_tcp::tcp::ActionKind;
use smart_tcp::{LocalAction, Role, SeqNum, TcpFlags, TcpState};

/// Oracle that closes with a bare FIN, which any receiver must reject.
struct BareFin;

impl CognitiveCore for BareFin {
    fn decide(&self, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError> {
        let mut d = oracle_transition(&input.state, input.received.as_ref(), &input.action);
        if input.action.kind() == ActionKind::Close && d.flags == Some(TcpFlags::FIN_ACK) {
            d.flags = Some(TcpFlags::FIN);
        }
        Ok(d)
    }
    fn name(&self) -> &str {
        "bare-fin"
    }
}

/// Oracle that completes the handshake with PSH|ACK instead of ACK.
struct WrongHandshakeFlags;

impl CognitiveCore for WrongHandshakeFlags {
    fn decide(&self, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError> {
        let mut d = oracle_transition(&input.state, input.received.as_ref(), &input.action);
        if input.state.state == TcpState::SynSent {
            d.flags = Some(TcpFlags::PSH_ACK);
        }
        Ok(d)
    }
    fn name(&self) -> &str {
        "wrong-handshake-flags"
    }
}

fn config(sessions: usize, seed: u64) -> TrialConfig {
    TrialConfig { sessions, base_seed: seed, ..Default::default() }
}

#[test]
fn thirty_oracle_sessions_all_pass() {
    let started = Instant::now();
    let run = run_trials(&ReferenceOracle, &ReferenceOracle, &config(30, 7));
    assert!(started.elapsed().as_secs_f64() < 5.0);
    let r = &run.report;
    assert_eq!((r.sessions, r.trial_passes), (30, 30));
    assert!(r.render_table("Oracle").contains("Trial Accuracy  | 100.00%"));
    let isn = IsnRange::default();
    for t in &run.transcripts {
        assert!(t.halt.is_none());
        assert_eq!(t.final_states, FinalStates { client: TcpState::Closed, server: TcpState::Closed });
        for s in [t.client_iss, t.server_iss] {
            assert!((isn.min..=isn.max).contains(&s.get()));
        }
    }
}

#[test]
fn two_forced_failures_give_93_33() {
    let oracle = ReferenceOracle;
    let broken = BareFin;
    let run = run_trials_with(&config(30, 7), |i| {
        let c: &dyn CognitiveCore = if i == 4 || i == 19 { &broken } else { &oracle };
        (c, &oracle)
    });
    let r = &run.report;
    assert_eq!(r.trial_passes, 28);
    assert_eq!(smart_tcp::eval::pct2(r.trial_accuracy), "93.33%");
    assert_eq!(r.handshake, 1.0);
    assert_eq!(r.data_transfer, 1.0);
    assert!(r.render_table("Broken").contains("93.33%"));
    let t = &run.transcripts[4];
    assert!(matches!(t.halt, Some(Halt::Verdict { role: Role::Server, verdict: Verdict::FlagError, .. })));
    assert!(!t.phase_results.termination.passed());
}

#[test]
fn handshake_failure_cascades() {
    let t = run_session(&WrongHandshakeFlags, &ReferenceOracle, &Scenario::default(), 1);
    assert!(!t.phase_results.handshake.passed());
    assert!(!t.phase_results.data_transfer.passed());
    assert!(!t.phase_results.termination.passed());
}

#[test]
fn close_modes_and_closers_pass() {
    for mode in [CloseMode::FourWay, CloseMode::Piggyback] {
        for closer in [Role::Client, Role::Server] {
            let sc = scenario(&[(Role::Server, 9), (Role::Client, 1), (Role::Client, 65_000)], closer, mode);
            for t in oracle_sessions(&sc, 0..5) {
                assert!(t.phase_results.all_pass(), "{mode:?} {closer:?}: {:?}", t.phase_results);
            }
        }
    }
    let t = &oracle_sessions(&scenario(&[], Role::Client, CloseMode::Piggyback), [0])[0];
    assert_eq!(t.records.len(), 6);
}

#[test]
fn isn_wraparound_sessions_pass() {
    let opts = SessionOptions { isn: IsnRange::new(u32::MAX - 600, u32::MAX).unwrap(), ..Default::default() };
    for seed in 0..20 {
        let t = run_session_with(&ReferenceOracle, &ReferenceOracle, &Scenario::default(), seed, &opts);
        assert!(t.phase_results.all_pass(), "{:?}", t.phase_results);
    }
    assert!(IsnRange::new(5, 5).is_err());
}

#[test]
fn transcripts_are_deterministic_and_round_trip() {
    let a = run_session(&ReferenceOracle, &ReferenceOracle, &Scenario::default(), 42);
    let b = run_session(&ReferenceOracle, &ReferenceOracle, &Scenario::default(), 42);
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    a.write_jsonl(&mut ba).unwrap();
    b.write_jsonl(&mut bb).unwrap();
    assert_eq!(ba, bb);
    let back = SessionTranscript::read_jsonl(&ba[..]).unwrap();
    let mut again = Vec::new();
    back.write_jsonl(&mut again).unwrap();
    assert_eq!(again, ba);
    assert_eq!(back.segments(), a.segments());
    assert_eq!(grade(&back), a.phase_results);

    let seq = run_trials(&ReferenceOracle, &ReferenceOracle, &TrialConfig { execution: Execution::Sequential, ..config(8, 3) });
    let par = run_trials(&ReferenceOracle, &ReferenceOracle, &TrialConfig { execution: Execution::Parallel, ..config(8, 3) });
    assert_eq!(seq.transcripts, par.transcripts);
}

#[test]
fn reorder_swap_is_an_order_error() {
    let opts = SessionOptions { fault: FaultSpec::reorder_swap(3), ..Default::default() };
    let t = run_session_with(&ReferenceOracle, &ReferenceOracle, &Scenario::default(), 5, &opts);
    assert!(t.fault_applied);
    assert!(matches!(t.halt, Some(Halt::Verdict { verdict: Verdict::OrderError, .. })));
    assert!(!t.phase_results.data_transfer.passed());
    assert!(t.phase_results.handshake.passed());
}

#[test]
fn flag_mutation_is_a_flag_error() {
    let opts = SessionOptions { fault: FaultSpec::flag_mutate(3, TcpFlags::SYN | TcpFlags::FIN), ..Default::default() };
    let t = run_session_with(&ReferenceOracle, &ReferenceOracle, &Scenario::default(), 5, &opts);
    assert!(t.fault_applied);
    assert!(matches!(t.halt, Some(Halt::Verdict { verdict: Verdict::FlagError, .. })));
}

#[test]
fn recorded_stream_faults() {
    let t = run_session(&ReferenceOracle, &ReferenceOracle, &Scenario::default(), 5);
    let stream = t.segments();
    assert_eq!(inject_fault(&stream, &FaultSpec::none()).unwrap(), stream);
    let swapped = inject_fault(&stream, &FaultSpec::reorder_swap(0)).unwrap();
    assert_eq!((&swapped[0], &swapped[1]), (&stream[1], &stream[0]));
    let mutated = inject_fault(&stream, &FaultSpec::flag_mutate(2, TcpFlags::RST)).unwrap();
    assert_eq!(mutated[2].flags(), TcpFlags::RST);
    assert_eq!(mutated[2].ack(), SeqNum(0));
    assert!(matches!(
        inject_fault(&stream, &FaultSpec::reorder_swap(stream.len() - 1)),
        Err(FaultError::IndexOutOfRange { .. })
    ));
}

#[test]
fn step_budget_halts_with_timeout() {
    let mut sc = Scenario::default();
    sc.steps_budget = 5;
    let t = run_session(&ReferenceOracle, &ReferenceOracle, &sc, 1);
    assert!(matches!(t.halt, Some(Halt::Timeout { .. })));
    assert!(!t.phase_results.all_pass());
}

#[test]
fn local_actions_in_wrong_state_are_silent() {
    let core = ReferenceOracle;
    let mut a = Agent::new(&core, Role::Client, SeqNum(1));
    let out = a.step(AgentEvent::LocalAction(LocalAction::send_len(5).unwrap())).unwrap();
    assert!(out.emitted.is_none());
    assert_eq!(a.state().state, TcpState::Closed);
}
