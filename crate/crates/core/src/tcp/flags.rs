use std::fmt;
use std::ops::{BitOr, BitOrAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlagsParseError {
    #[error("empty flag string")]
    Empty,
    #[error("unknown flag token `{0}`")]
    UnknownToken(String),
    #[error("duplicate flag token `{0}`")]
    Duplicate(String),
}

/// TCP control bits. Only the six classic flags are modelled.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TcpFlags(u8);

impl TcpFlags {
    pub const SYN: TcpFlags = TcpFlags(1 << 0);
    pub const ACK: TcpFlags = TcpFlags(1 << 1);
    pub const FIN: TcpFlags = TcpFlags(1 << 2);
    pub const RST: TcpFlags = TcpFlags(1 << 3);
    pub const PSH: TcpFlags = TcpFlags(1 << 4);
    pub const URG: TcpFlags = TcpFlags(1 << 5);

    pub const SYN_ACK: TcpFlags = TcpFlags(Self::SYN.0 | Self::ACK.0);
    pub const FIN_ACK: TcpFlags = TcpFlags(Self::FIN.0 | Self::ACK.0);
    pub const PSH_ACK: TcpFlags = TcpFlags(Self::PSH.0 | Self::ACK.0);

    /// Canonical rendering order. ACK goes last so combinations read `SYN|ACK`, `FIN|ACK`, `PSH|ACK`.
    const ORDER: [(TcpFlags, &'static str); 6] = [
        (Self::SYN, "SYN"),
        (Self::FIN, "FIN"),
        (Self::RST, "RST"),
        (Self::PSH, "PSH"),
        (Self::URG, "URG"),
        (Self::ACK, "ACK"),
    ];

    pub const fn empty() -> Self {
        TcpFlags(0)
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    /// Builds a flag set from raw bits, ignoring anything above URG.
    pub const fn from_bits_truncate(bits: u8) -> Self {
        TcpFlags(bits & 0x3f)
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, other: TcpFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub const fn syn(self) -> bool {
        self.contains(Self::SYN)
    }
    pub const fn ack(self) -> bool {
        self.contains(Self::ACK)
    }
    pub const fn fin(self) -> bool {
        self.contains(Self::FIN)
    }
    pub const fn rst(self) -> bool {
        self.contains(Self::RST)
    }
    pub const fn psh(self) -> bool {
        self.contains(Self::PSH)
    }
    pub const fn urg(self) -> bool {
        self.contains(Self::URG)
    }

    pub const fn without(self, other: TcpFlags) -> Self {
        TcpFlags(self.0 & !other.0)
    }

    /// Every segment on the wire carries at least one control bit.
    pub const fn is_valid_on_wire(self) -> bool {
        !self.is_empty()
    }

    /// Canonical pipe-separated form, e.g. `SYN|ACK`. The empty set renders as `""`.
    pub fn render(self) -> String {
        let mut out = String::new();
        for (flag, name) in Self::ORDER {
            if self.contains(flag) {
                if !out.is_empty() {
                    out.push('|');
                }
                out.push_str(name);
            }
        }
        out
    }

    /// Parses a pipe-separated, case-insensitive, any-order token list.
    pub fn parse(text: &str) -> Result<Self, FlagsParseError> {
        if text.trim().is_empty() {
            return Err(FlagsParseError::Empty);
        }
        let mut flags = TcpFlags::empty();
        for raw in text.split('|') {
            let token = raw.trim();
            let upper = token.to_ascii_uppercase();
            let flag = Self::ORDER
                .iter()
                .find(|(_, name)| *name == upper)
                .map(|(f, _)| *f)
                .ok_or_else(|| FlagsParseError::UnknownToken(token.to_string()))?;
            if flags.contains(flag) {
                return Err(FlagsParseError::Duplicate(token.to_string()));
            }
            flags |= flag;
        }
        Ok(flags)
    }
}

pub fn flags_parse(text: &str) -> Result<TcpFlags, FlagsParseError> {
    TcpFlags::parse(text)
}

pub fn flags_render(flags: TcpFlags) -> String {
    flags.render()
}

impl BitOr for TcpFlags {
    type Output = TcpFlags;
    fn bitor(self, rhs: TcpFlags) -> TcpFlags {
        TcpFlags(self.0 | rhs.0)
    }
}

impl BitOrAssign for TcpFlags {
    fn bitor_assign(&mut self, rhs: TcpFlags) {
        self.0 |= rhs.0;
    }
}

impl fmt::Display for TcpFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for TcpFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TcpFlags({})", self.render())
    }
}

impl FromStr for TcpFlags {
    type Err = FlagsParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TcpFlags::parse(s)
    }
}

impl Serialize for TcpFlags {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for TcpFlags {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        TcpFlags::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonicalizes_order_and_case() {
        assert_eq!(flags_parse("ack|syn").unwrap().render(), "SYN|ACK");
        let fa = flags_parse("FIN|ACK").unwrap();
        assert!(fa.fin() && fa.ack() && !fa.syn());
        assert_eq!(fa.render(), "FIN|ACK");
        assert_eq!(TcpFlags::PSH_ACK.render(), "PSH|ACK");
        assert_eq!(flags_parse("ack|rst|syn").unwrap().render(), "SYN|RST|ACK");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(flags_parse("SIN"), Err(FlagsParseError::UnknownToken("SIN".into())));
        assert_eq!(flags_parse(""), Err(FlagsParseError::Empty));
        assert!(matches!(flags_parse("ACK|ack"), Err(FlagsParseError::Duplicate(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn render_parse_round_trip(bits in 1u8..64) {
            let f = TcpFlags::from_bits_truncate(bits);
            prop_assert_eq!(flags_parse(&flags_render(f)).unwrap(), f);
        }
    }
}
