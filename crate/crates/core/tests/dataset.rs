mod common;

use common::*;
use smart_tcp::cognitive::{parse_decision, CognitiveDecision, Verdict};
use smart_tcp::dataset::*;
use smart_tcp::par::Execution;
use smart_tcp::runtime::{CloseMode, Scenario};
use smart_tcp::{alu_execute, AluTask, Role, TcpFlags, TcpState};

fn roundtrip(scenario: &Scenario, seeds: std::ops::Range<u64>) {
    let live = oracle_sessions(scenario, seeds);
    assert!(live.iter().all(|t| t.phase_results.all_pass()));
    let trace = capture(&live);
    let mut buf = Vec::new();
    write_trace(&trace, &mut buf).unwrap();
    let ingested = ingest_reader(&buf[..]).unwrap();
    for (i, (a, b)) in ingested.records.iter().zip(&trace).enumerate() {
        assert_eq!(a, b, "record {i}");
    }

    let flows = extract_flows(&ingested.records);
    assert_eq!(flows.len(), live.len());
    assert!(flows.iter().all(Flow::is_complete));
    for (flow, t) in flows.iter().zip(&live) {
        let rec = reconstruct_labels(flow).unwrap();
        assert!(rec.skipped.is_empty(), "{:?}", rec.skipped);
        assert_eq!(rec.samples.len(), t.records.len());
        for s in &rec.samples {
            let Provenance::Flow { record_index, .. } = s.provenance else { panic!() };
            let truth = &t.records[record_index];
            assert_eq!(s.label, truth.decision, "record {record_index}");
            assert!(same_input(&s.input, &truth.input), "record {record_index}");
            assert_eq!(s.label_numbers(), s.observed);
        }
    }
}

#[test]
fn default_scenario_round_trips() {
    roundtrip(&Scenario::default(), 0..20);
}

#[test]
fn bursts_piggyback_and_server_close_round_trip() {
    let sc = scenario(
        &[(Role::Client, 100), (Role::Client, 200), (Role::Client, 1), (Role::Server, 3000), (Role::Server, 7)],
        Role::Server,
        CloseMode::Piggyback,
    );
    roundtrip(&sc, 100..120);
    let sc = scenario(&[], Role::Client, CloseMode::Piggyback);
    roundtrip(&sc, 200..210);
    let sc = scenario(&[(Role::Server, 10)], Role::Client, CloseMode::FourWay);
    roundtrip(&sc, 300..310);
}

#[test]
fn minimal_flow_sample_count_and_first_labels() {
    // SYN, SYN|ACK, ACK, FIN|ACK, ACK, FIN|ACK, ACK: every recorded segment was emitted by someone.
    let live = oracle_sessions(&scenario(&[], Role::Client, CloseMode::FourWay), [5]);
    assert_eq!(live[0].records.len(), 7);
    let flows = extract_flows(&capture(&live));
    let rec = reconstruct_labels(&flows[0]).unwrap();
    assert_eq!(rec.samples.len(), 7);
    let syn = &rec.samples[0].label;
    assert_eq!(*syn, CognitiveDecision::reply(TcpState::SynSent, TcpFlags::SYN, 0, AluTask::InitSyn));
    assert_eq!(rec.samples[1].label.t_task, Some(AluTask::CalculateSeqAck));
    assert_eq!(rec.samples[1].label.flags, Some(TcpFlags::SYN_ACK));
}

#[test]
fn incomplete_flow_is_not_labeled() {
    let live = oracle_sessions(&Scenario::default(), [1]);
    let mut trace = capture(&live);
    trace.pop();
    let flows = extract_flows(&trace);
    assert_eq!(flows[0].completeness, Completeness::Incomplete);
    assert!(matches!(reconstruct_labels(&flows[0]), Err(ReconstructError::Incomplete(0))));
    assert!(reconstruct_flows(&flows, Execution::Sequential).is_empty());
}

#[test]
fn retransmission_is_skipped_not_fatal() {
    let live = oracle_sessions(&Scenario::default(), [2]);
    let mut trace = capture(&live);
    // duplicate the first client data segment
    let dup = trace.iter().position(|r| r.segment.payload_len() > 0).unwrap();
    trace.insert(dup + 1, trace[dup].clone());
    let flows = extract_flows(&trace);
    let rec = reconstruct_labels(&flows[0]).unwrap();
    assert_eq!(rec.skipped.len(), 1);
    assert_eq!(rec.skipped[0].record_index, dup + 1);
}

#[test]
fn mostly_garbage_flow_is_dropped() {
    let live = oracle_sessions(&Scenario::default(), [3]);
    let mut trace = capture(&live);
    let data: Vec<_> = trace.iter().filter(|r| r.segment.payload_len() > 0).cloned().collect();
    for _ in 0..3 {
        trace.splice(4..4, data.iter().cloned());
    }
    for (i, r) in trace.iter_mut().enumerate() {
        r.timestamp = i as f64;
    }
    let flows = extract_flows(&trace);
    assert!(matches!(reconstruct_labels(&flows[0]), Err(ReconstructError::TooManySkipped { .. })));
}

fn contexts(n: u64) -> Vec<ReceiveContext> {
    let live = oracle_sessions(&Scenario::default(), 0..n);
    let flows = extract_flows(&capture(&live));
    reconstruct_flows(&flows, Execution::default()).into_iter().flat_map(|r| r.unwrap().contexts).collect()
}

#[test]
fn error_dataset_counts_and_soundness() {
    let ctx = contexts(10);
    let set = generate_error_dataset(&ctx, 200, 0.5, 9).unwrap();
    assert_eq!(set.len(), 200);
    let order = set.iter().filter(|s| s.label.verdict == Verdict::OrderError).count();
    let flag = set.iter().filter(|s| s.label.verdict == Verdict::FlagError).count();
    assert_eq!((order, flag), (100, 100));
    assert!(set.iter().all(oracle_agrees));
    for s in &set {
        assert_eq!(s.label.flags, None);
        assert_eq!(s.label.t_task, None);
        assert_eq!(s.label.next_state, s.input.state.state);
        let Provenance::Mutation { kind, .. } = s.provenance else { panic!() };
        assert_eq!(kind.verdict(), s.label.verdict);
        if kind == MutationKind::FlagIllegalCombo {
            assert_eq!(s.input.received.as_ref().unwrap().flags(), TcpFlags::SYN | TcpFlags::FIN);
        }
    }
    let big = generate_error_dataset(&ctx, DEFAULT_ERROR_COUNT, DEFAULT_ORDER_RATIO, 1).unwrap();
    assert_eq!(big.len(), 2000);
    assert_eq!(generate_error_dataset(&ctx, 200, 0.5, 9).unwrap(), set);
    assert_eq!(generate_error_dataset(&ctx, 7, 0.3, 0).unwrap().iter().filter(|s| s.label.verdict == Verdict::OrderError).count(), 2);
}

#[test]
fn error_dataset_preconditions() {
    let ctx = contexts(1);
    assert!(matches!(generate_error_dataset(&ctx, 1, 0.5, 0), Err(ErrorDatasetError::CountTooSmall(1))));
    assert!(matches!(generate_error_dataset(&[], 10, 0.5, 0), Err(ErrorDatasetError::InsufficientContexts(_))));
    assert!(generate_error_dataset(&ctx, 10, 1.5, 0).is_err());
}

#[test]
fn sft_formats() {
    let live = oracle_sessions(&Scenario::default(), [4]);
    let flows = extract_flows(&capture(&live));
    let samples = reconstruct_labels(&flows[0]).unwrap().samples;

    let mut pairs = Vec::new();
    write_sft(&samples[..1], &mut pairs, SftFormat::Pairs).unwrap();
    let text = String::from_utf8(pairs.clone()).unwrap();
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["input", "label"]);

    let mut again = Vec::new();
    write_sft(&samples[..1], &mut again, SftFormat::Pairs).unwrap();
    assert_eq!(pairs, again);

    let mut instruct = Vec::new();
    write_sft(&samples, &mut instruct, SftFormat::Instruct).unwrap();
    for line in String::from_utf8(instruct.clone()).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        parse_decision(v["output"].as_str().unwrap()).unwrap();
    }
    let back = read_sft(&instruct[..]).unwrap();
    assert_eq!(back.len(), samples.len());
    assert!(back.iter().zip(&samples).all(|((i, l), s)| *l == s.label && same_input(i, &s.input)));
    assert_eq!(read_sft(&pairs[..]).unwrap().len(), 1);
}

#[test]
fn alu_consistency_on_every_flow_sample() {
    let live = oracle_sessions(&Scenario::default(), 50..60);
    let flows = extract_flows(&capture(&live));
    for r in reconstruct_flows(&flows, Execution::Sequential) {
        for s in r.unwrap().samples {
            let t = s.label.t_task.unwrap();
            let got = alu_execute(t, &s.input.state, s.input.received.as_ref()).unwrap();
            assert_eq!(Some(got), s.observed);
        }
    }
}
