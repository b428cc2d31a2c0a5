use std::fmt;

use serde::{Deserialize, Serialize};

const HALF_SPACE: u32 = 1 << 31;

/// A position in the 32-bit TCP sequence space.
///
/// All arithmetic wraps modulo 2^32. Ordering follows serial-number
/// arithmetic: `a` precedes `b` when the forward distance from `a` to `b`
/// is non-zero and below 2^31. Pairs exactly 2^31 apart are unordered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeqNum(pub u32);

impl SeqNum {
    pub const ZERO: SeqNum = SeqNum(0);

    pub const fn new(value: u32) -> Self {
        SeqNum(value)
    }

    pub const fn get(self) -> u32 {
        self.0
    }

    /// `(self + n) mod 2^32`.
    pub const fn add(self, n: u32) -> SeqNum {
        SeqNum(self.0.wrapping_add(n))
    }

    /// Forward distance from `self` to `other`, modulo 2^32.
    pub const fn distance_to(self, other: SeqNum) -> u32 {
        other.0.wrapping_sub(self.0)
    }

    /// Serial-order "strictly before".
    pub const fn lt(self, other: SeqNum) -> bool {
        let d = self.distance_to(other);
        d != 0 && d < HALF_SPACE
    }

    pub const fn le(self, other: SeqNum) -> bool {
        self.0 == other.0 || self.lt(other)
    }
}

impl From<u32> for SeqNum {
    fn from(v: u32) -> Self {
        SeqNum(v)
    }
}

impl From<SeqNum> for u32 {
    fn from(v: SeqNum) -> Self {
        v.0
    }
}

impl fmt::Display for SeqNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Free-function form of [`SeqNum::add`].
pub fn seq_add(a: SeqNum, n: u32) -> SeqNum {
    a.add(n)
}

/// Free-function form of [`SeqNum::lt`].
pub fn seq_lt(a: SeqNum, b: SeqNum) -> bool {
    a.lt(b)
}
