use std::collections::HashMap;
use std::net::SocketAddr;

use serde::Serialize;

use super::trace::{FiveTuple, TraceRecord};
use crate::tcp::{Role, SeqNum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Completeness {
    Complete,
    Incomplete,
}

#[derive(Clone, Debug)]
pub struct Flow {
    pub flow_id: usize,
    /// Oriented client to server; the client is whoever sent the first SYN.
    pub initiator: FiveTuple,
    pub records: Vec<TraceRecord>,
    pub completeness: Completeness,
}

impl Flow {
    pub fn is_complete(&self) -> bool {
        self.completeness == Completeness::Complete
    }

    pub fn client(&self) -> SocketAddr {
        self.initiator.src()
    }

    pub fn role_of(&self, rec: &TraceRecord) -> Role {
        if rec.five_tuple.src() == self.client() { Role::Client } else { Role::Server }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FlowSummary {
    pub flows: usize,
    pub complete: usize,
    pub packets: usize,
}

impl FlowSummary {
    /// Counts only complete flows in `packets`.
    pub fn of(flows: &[Flow]) -> Self {
        let complete: Vec<_> = flows.iter().filter(|f| f.is_complete()).collect();
        FlowSummary {
            flows: flows.len(),
            complete: complete.len(),
            packets: complete.iter().map(|f| f.records.len()).sum(),
        }
    }
}

type Key = (SocketAddr, SocketAddr, u8);

fn key(t: &FiveTuple) -> Key {
    let (a, b) = (t.src(), t.dst());
    if a <= b { (a, b, t.protocol) } else { (b, a, t.protocol) }
}

struct Open {
    index: usize,
    fins: u8,
    reset: bool,
}

/// Groups sorted records into flows by direction-normalized 5-tuple.
pub fn extract_flows(records: &[TraceRecord]) -> Vec<Flow> {
    let mut flows: Vec<Flow> = Vec::new();
    let mut open: HashMap<Key, Open> = HashMap::new();
    for rec in records {
        let k = key(&rec.five_tuple);
        let f = rec.segment.flags();
        let fresh_syn = f.syn() && !f.ack();
        let start_new = match open.get(&k) {
            None => true,
            Some(o) => fresh_syn && (o.fins >= 2 || o.reset),
        };
        if start_new {
            let initiator = rec.five_tuple;
            open.insert(k, Open { index: flows.len(), fins: 0, reset: false });
            flows.push(Flow {
                flow_id: flows.len(),
                initiator,
                records: Vec::new(),
                completeness: Completeness::Incomplete,
            });
        }
        let o = open.get_mut(&k).expect("inserted above");
        let flow = &mut flows[o.index];
        if f.fin() && !flow.records.iter().any(|r| r.five_tuple == rec.five_tuple && r.segment.flags().fin()) {
            o.fins += 1;
        }
        o.reset |= f.rst();
        flow.records.push(rec.clone());
    }
    for flow in &mut flows {
        flow.completeness = completeness(flow);
    }
    flows
}

fn completeness(flow: &Flow) -> Completeness {
    let client = flow.initiator;
    let server = client.reversed();
    let recs = &flow.records;
    let Some(first) = recs.first() else {
        return Completeness::Incomplete;
    };
    let ff = first.segment.flags();
    let opened = first.five_tuple == client && ff.syn() && !ff.ack();
    let synack = recs.iter().any(|r| r.five_tuple == server && r.segment.flags().contains(crate::tcp::TcpFlags::SYN_ACK));
    let closed = fin_acked(recs, &client, &server) && fin_acked(recs, &server, &client);
    if opened && synack && closed { Completeness::Complete } else { Completeness::Incomplete }
}

/// The first FIN from `from` is acknowledged by a later segment from `to`.
fn fin_acked(recs: &[TraceRecord], from: &FiveTuple, to: &FiveTuple) -> bool {
    let Some(pos) = recs.iter().position(|r| r.five_tuple == *from && r.segment.flags().fin()) else {
        return false;
    };
    let fin_end: SeqNum = recs[pos].segment.end();
    recs[pos + 1..]
        .iter()
        .any(|r| r.five_tuple == *to && r.segment.flags().ack() && fin_end.le(r.segment.ack()))
}
