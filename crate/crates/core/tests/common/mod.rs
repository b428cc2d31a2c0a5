#![allow(dead_code)]

use std::net::SocketAddr;

use smart_tcp::cognitive::{CognitiveInput, ReferenceOracle};
use smart_tcp::dataset::{transcript_to_trace, TraceRecord};
use smart_tcp::runtime::{run_session, CloseMode, DataItem, Scenario, SessionTranscript};
use smart_tcp::Role;

pub fn server_addr() -> SocketAddr {
    "10.0.0.2:80".parse().unwrap()
}

pub fn client_addr(i: usize) -> SocketAddr {
    SocketAddr::new("10.0.0.1".parse().unwrap(), 40_000 + i as u16)
}

pub fn oracle_sessions(scenario: &Scenario, seeds: impl IntoIterator<Item = u64>) -> Vec<SessionTranscript> {
    let core = ReferenceOracle;
    seeds.into_iter().map(|s| run_session(&core, &core, scenario, s)).collect()
}

/// Concatenates transcripts into one capture, one client port per session.
pub fn capture(transcripts: &[SessionTranscript]) -> Vec<TraceRecord> {
    transcripts
        .iter()
        .enumerate()
        .flat_map(|(i, t)| transcript_to_trace(t, client_addr(i), server_addr(), i as f64 * 10.0))
        .collect()
}

pub fn scenario(data: &[(Role, u32)], closer: Role, close_mode: CloseMode) -> Scenario {
    Scenario {
        id: "test".into(),
        data_script: data.iter().map(|&(side, payload_len)| DataItem { side, payload_len }).collect(),
        closer,
        close_mode,
        steps_budget: 256,
    }
}

/// Same header-level content: state, action kind and length, received segment header.
pub fn same_input(a: &CognitiveInput, b: &CognitiveInput) -> bool {
    a.state == b.state
        && a.action.kind() == b.action.kind()
        && a.action.data_len() == b.action.data_len()
        && match (&a.received, &b.received) {
            (None, None) => true,
            (Some(x), Some(y)) => x.same_header(y),
            _ => false,
        }
}

/// Labeled steps reconstructed from oracle sessions.
pub fn oracle_samples(sessions: u64) -> Vec<smart_tcp::dataset::LabeledSample> {
    use smart_tcp::dataset::{extract_flows, reconstruct_flows};
    let live = oracle_sessions(&Scenario::default(), 0..sessions);
    let flows = extract_flows(&capture(&live));
    reconstruct_flows(&flows, smart_tcp::par::Execution::default())
        .into_iter()
        .flat_map(|r| r.unwrap().samples)
        .collect()
}

/// Oracle-derived error samples.
pub fn error_samples(count: usize, seed: u64) -> Vec<smart_tcp::dataset::LabeledSample> {
    use smart_tcp::dataset::{extract_flows, generate_error_dataset, reconstruct_flows};
    let live = oracle_sessions(&Scenario::default(), 0..10);
    let flows = extract_flows(&capture(&live));
    let ctx: Vec<_> = reconstruct_flows(&flows, smart_tcp::par::Execution::default())
        .into_iter()
        .flat_map(|r| r.unwrap().contexts)
        .collect();
    generate_error_dataset(&ctx, count, 0.5, seed).unwrap()
}

pub mod invariants;
pub mod mock;
