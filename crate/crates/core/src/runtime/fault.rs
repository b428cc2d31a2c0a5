use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tcp::{Segment, TcpFlags};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FaultKind {
    #[default]
    None,
    /// Deliver segment `i + 1` before segment `i`.
    ReorderSwap,
    /// Replace the control bits of segment `i`.
    FlagMutate,
}

/// A single fault applied to the delivery stream, indexed by emission order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultSpec {
    pub kind: FaultKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<TcpFlags>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaultError {
    #[error("fault index {index} out of range for a stream of {len} segments")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid fault spec: {0}")]
    Invalid(&'static str),
}

impl FaultSpec {
    pub fn none() -> Self {
        FaultSpec::default()
    }

    pub fn reorder_swap(index: usize) -> Self {
        FaultSpec { kind: FaultKind::ReorderSwap, target_index: Some(index), mutation: None }
    }

    pub fn flag_mutate(index: usize, flags: TcpFlags) -> Self {
        FaultSpec { kind: FaultKind::FlagMutate, target_index: Some(index), mutation: Some(flags) }
    }

    pub fn validate(&self) -> Result<(), FaultError> {
        match self.kind {
            FaultKind::None if self.target_index.is_some() || self.mutation.is_some() => {
                Err(FaultError::Invalid("kind NONE takes no index or mutation"))
            }
            FaultKind::ReorderSwap if self.target_index.is_none() || self.mutation.is_some() => {
                Err(FaultError::Invalid("REORDER_SWAP takes an index and no mutation"))
            }
            FaultKind::FlagMutate if self.target_index.is_none() || self.mutation.is_none() => {
                Err(FaultError::Invalid("FLAG_MUTATE takes an index and a flag set"))
            }
            _ => Ok(()),
        }
    }

    /// Checks the target against a stream of `len` segments.
    pub fn check_range(&self, len: usize) -> Result<(), FaultError> {
        self.validate()?;
        let (Some(index), needed) = (self.target_index, if self.kind == FaultKind::ReorderSwap { 2 } else { 1 }) else {
            return Ok(());
        };
        if index + needed > len {
            return Err(FaultError::IndexOutOfRange { index, len });
        }
        Ok(())
    }
}

/// Applies `fault` to a recorded delivery stream.
pub fn inject_fault(stream: &[Segment], fault: &FaultSpec) -> Result<Vec<Segment>, FaultError> {
    fault.check_range(stream.len())?;
    let mut out = stream.to_vec();
    match (fault.kind, fault.target_index, fault.mutation) {
        (FaultKind::ReorderSwap, Some(i), _) => out.swap(i, i + 1),
        (FaultKind::FlagMutate, Some(i), Some(flags)) => out[i] = out[i].with_flags(flags),
        _ => {}
    }
    Ok(out)
}

/// Streaming form of [`inject_fault`] used while a session runs.
#[derive(Debug)]
pub(crate) struct FaultInjector<T> {
    spec: FaultSpec,
    held: Option<T>,
    applied: bool,
}

impl<T> FaultInjector<T> {
    pub(crate) fn new(spec: FaultSpec) -> Self {
        FaultInjector { spec, held: None, applied: false }
    }

    pub(crate) fn applied(&self) -> bool {
        self.applied
    }

    pub(crate) fn spec(&self) -> &FaultSpec {
        &self.spec
    }

    /// Feeds the `index`-th emitted item; returns what to enqueue, in order.
    pub(crate) fn on_emit(&mut self, index: usize, mut item: T, segment: impl FnOnce(&mut T) -> &mut Segment) -> Vec<T> {
        match (self.spec.kind, self.spec.target_index, self.spec.mutation) {
            (FaultKind::FlagMutate, Some(i), Some(flags)) if i == index => {
                let seg = segment(&mut item);
                *seg = seg.with_flags(flags);
                self.applied = true;
                vec![item]
            }
            (FaultKind::ReorderSwap, Some(i), _) if i == index => {
                self.held = Some(item);
                Vec::new()
            }
            (FaultKind::ReorderSwap, Some(i), _) if i + 1 == index && self.held.is_some() => {
                self.applied = true;
                vec![item, self.held.take().expect("checked")]
            }
            _ => vec![item],
        }
    }

    /// Releases a held item when nothing else can be emitted to swap with it.
    pub(crate) fn release(&mut self) -> Option<T> {
        self.held.take()
    }
}
