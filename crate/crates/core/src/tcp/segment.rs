use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{SeqNum, TcpFlags};

/// Segment or SEND payload. Traces carry only the length, so bytes may be elided.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Payload {
    Bytes(Vec<u8>),
    Elided(u32),
}

impl Payload {
    pub const EMPTY: Payload = Payload::Elided(0);

    pub fn len(&self) -> u32 {
        match self {
            Payload::Bytes(b) => b.len() as u32,
            Payload::Elided(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bytes(&self) -> Option<&[u8]> {
        match self {
            Payload::Bytes(b) => Some(b),
            Payload::Elided(_) => None,
        }
    }
}

impl Default for Payload {
    fn default() -> Self {
        Payload::EMPTY
    }
}

/// A TCP segment as seen by the agent: sequence numbers, control bits and payload.
///
/// The acknowledgment number is forced to zero whenever ACK is absent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segment {
    seq: SeqNum,
    ack: SeqNum,
    flags: TcpFlags,
    payload: Payload,
}

impl Segment {
    pub fn new(seq: SeqNum, ack: SeqNum, flags: TcpFlags, payload: Payload) -> Self {
        let ack = if flags.ack() { ack } else { SeqNum::ZERO };
        Segment { seq, ack, flags, payload }
    }

    /// Segment without payload.
    pub fn control(seq: impl Into<SeqNum>, ack: impl Into<SeqNum>, flags: TcpFlags) -> Self {
        Segment::new(seq.into(), ack.into(), flags, Payload::EMPTY)
    }

    pub fn seq(&self) -> SeqNum {
        self.seq
    }
    pub fn ack(&self) -> SeqNum {
        self.ack
    }
    pub fn flags(&self) -> TcpFlags {
        self.flags
    }
    pub fn payload(&self) -> &Payload {
        &self.payload
    }
    pub fn payload_len(&self) -> u32 {
        self.payload.len()
    }

    /// Sequence space occupied: payload bytes plus one for each of SYN and FIN.
    pub fn consumes(&self) -> u32 {
        segment_consumes(self)
    }

    /// First sequence number after this segment.
    pub fn end(&self) -> SeqNum {
        self.seq.add(self.consumes())
    }

    pub fn with_flags(&self, flags: TcpFlags) -> Segment {
        Segment::new(self.seq, self.ack, flags, self.payload.clone())
    }

    pub fn with_seq(&self, seq: SeqNum) -> Segment {
        Segment::new(seq, self.ack, self.flags, self.payload.clone())
    }

    /// Equality on the fields carried by the canonical text form (bytes ignored).
    pub fn same_header(&self, other: &Segment) -> bool {
        self.seq == other.seq
            && self.ack == other.ack
            && self.flags == other.flags
            && self.payload_len() == other.payload_len()
    }
}

pub fn segment_consumes(seg: &Segment) -> u32 {
    seg.payload_len() + u32::from(seg.flags.syn()) + u32::from(seg.flags.fin())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentWire {
    seq: u32,
    ack: u32,
    flags: TcpFlags,
    payload_len: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payload: Option<String>,
}

impl Serialize for Segment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SegmentWire {
            seq: self.seq.get(),
            ack: self.ack.get(),
            flags: self.flags,
            payload_len: self.payload_len(),
            payload: self.payload.bytes().filter(|b| !b.is_empty()).map(|b| B64.encode(b)),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Segment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let w = SegmentWire::deserialize(deserializer)?;
        let payload = match w.payload {
            Some(text) => {
                let bytes = B64.decode(text.as_bytes()).map_err(D::Error::custom)?;
                if bytes.len() as u64 != u64::from(w.payload_len) {
                    return Err(D::Error::custom(format!(
                        "payload_len {} does not match {} payload bytes",
                        w.payload_len,
                        bytes.len()
                    )));
                }
                Payload::Bytes(bytes)
            }
            None => Payload::Elided(w.payload_len),
        };
        Ok(Segment::new(SeqNum(w.seq), SeqNum(w.ack), w.flags, payload))
    }
}
