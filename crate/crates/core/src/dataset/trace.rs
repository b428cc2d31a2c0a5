use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runtime::{Direction, SessionTranscript};
use crate::tcp::{Payload, Segment, SeqNum, TcpFlags};

pub const PROTO_TCP: u8 = 6;

/// Fraction of malformed lines above which ingestion fails outright.
pub const MAX_REJECT_RATIO: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FiveTuple {
    pub src_addr: IpAddr,
    pub src_port: u16,
    pub dst_addr: IpAddr,
    pub dst_port: u16,
    pub protocol: u8,
}

impl FiveTuple {
    pub fn src(&self) -> SocketAddr {
        SocketAddr::new(self.src_addr, self.src_port)
    }

    pub fn dst(&self) -> SocketAddr {
        SocketAddr::new(self.dst_addr, self.dst_port)
    }

    pub fn reversed(&self) -> FiveTuple {
        FiveTuple {
            src_addr: self.dst_addr,
            src_port: self.dst_port,
            dst_addr: self.src_addr,
            dst_port: self.src_port,
            protocol: self.protocol,
        }
    }
}

/// One captured TCP segment.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub timestamp: f64,
    pub five_tuple: FiveTuple,
    pub segment: Segment,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceLine {
    ts: f64,
    src: SocketAddr,
    dst: SocketAddr,
    proto: String,
    seq: u32,
    ack: u32,
    flags: TcpFlags,
    payload_len: u32,
}

impl TraceRecord {
    pub fn new(timestamp: f64, src: SocketAddr, dst: SocketAddr, segment: Segment) -> Self {
        TraceRecord {
            timestamp,
            five_tuple: FiveTuple {
                src_addr: src.ip(),
                src_port: src.port(),
                dst_addr: dst.ip(),
                dst_port: dst.port(),
                protocol: PROTO_TCP,
            },
            segment,
        }
    }

    pub fn parse_line(line: &str) -> Result<Self, String> {
        let w: TraceLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if !w.proto.eq_ignore_ascii_case("tcp") {
            return Err(format!("protocol `{}` is not tcp", w.proto));
        }
        if !w.ts.is_finite() {
            return Err("non-finite timestamp".into());
        }
        let seg = Segment::new(SeqNum(w.seq), SeqNum(w.ack), w.flags, Payload::Elided(w.payload_len));
        Ok(TraceRecord::new(w.ts, w.src, w.dst, seg))
    }

    pub fn to_line(&self) -> String {
        let w = TraceLine {
            ts: self.timestamp,
            src: self.five_tuple.src(),
            dst: self.five_tuple.dst(),
            proto: "tcp".into(),
            seq: self.segment.seq().get(),
            ack: self.segment.ack().get(),
            flags: self.segment.flags(),
            payload_len: self.segment.payload_len(),
        };
        serde_json::to_string(&w).expect("trace line serialization is infallible")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Ingested {
    pub records: Vec<TraceRecord>,
    pub rejects: Vec<Reject>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("reading trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("{rejected} of {total} trace lines are malformed (limit 10%)")]
    TooManyRejects { rejected: usize, total: usize, rejects: Vec<Reject> },
}

pub fn ingest_trace(path: &Path) -> Result<Ingested, TraceError> {
    ingest_reader(BufReader::new(File::open(path)?))
}

/// Parses newline-delimited trace records and sorts them by timestamp (stable).
pub fn ingest_reader<R: BufRead>(reader: R) -> Result<Ingested, TraceError> {
    let mut out = Ingested::default();
    let mut total = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match TraceRecord::parse_line(&line) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.rejects.push(Reject { line: i + 1, reason }),
        }
    }
    if total > 0 && out.rejects.len() as f64 > MAX_REJECT_RATIO * total as f64 {
        return Err(TraceError::TooManyRejects { rejected: out.rejects.len(), total, rejects: out.rejects });
    }
    out.records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(out)
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        w.write_all(r.to_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Renders a session transcript as captured traffic, one record per delivered segment.
pub fn transcript_to_trace(t: &SessionTranscript, client: SocketAddr, server: SocketAddr, t0: f64) -> Vec<TraceRecord> {
    t.records
        .iter()
        .map(|rec| {
            let (src, dst) = match rec.direction {
                Direction::ClientToServer => (client, server),
                Direction::ServerToClient => (server, client),
            };
            let g = &rec.segment;
            let seg = Segment::new(g.seq(), g.ack(), g.flags(), Payload::Elided(g.payload_len()));
            TraceRecord::new(t0 + f64::from(rec.step) * 1e-3, src, dst, seg)
        })
        .collect()
}
