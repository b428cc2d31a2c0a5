use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::reconstruct::{LabeledSample, Provenance, ReceiveContext};
use crate::cognitive::{oracle_transition, CognitiveDecision, CognitiveInput, Verdict};
use crate::tcp::{LocalAction, Segment, TcpFlags, TcpState};


pub const DEFAULT_ERROR_COUNT: usize = 2000;
pub const DEFAULT_ORDER_RATIO: f64 = 0.5;
/// Inclusive bounds of the ORDER_SEQ_JUMP offset in bytes.
pub const SEQ_JUMP_RANGE: (u32, u32) = (1, 4096);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MutationKind {
    OrderSwap,
    OrderSeqJump,
    FlagIllegalCombo,
    FlagWrongState,
}

impl MutationKind {
    pub const ALL: [MutationKind; 4] =
        [MutationKind::OrderSwap, MutationKind::OrderSeqJump, MutationKind::FlagIllegalCombo, MutationKind::FlagWrongState];

    pub fn verdict(self) -> Verdict {
        match self {
            MutationKind::OrderSwap | MutationKind::OrderSeqJump => Verdict::OrderError,
            MutationKind::FlagIllegalCombo | MutationKind::FlagWrongState => Verdict::FlagError,
        }
    }
}

fn wrong_state_flags() -> [TcpFlags; 4] {
    [TcpFlags::SYN_ACK, TcpFlags::SYN, TcpFlags::FIN, TcpFlags::FIN | TcpFlags::PSH]
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErrorDatasetError {
    #[error("error dataset needs at least 2 samples, got {0}")]
    CountTooSmall(usize),
    #[error("order ratio {0} outside [0, 1]")]
    BadRatio(f64),
    #[error("no source context supports {0:?} mutations")]
    InsufficientContexts(MutationKind),
}

fn checks_order(state: TcpState) -> bool {
    state == TcpState::SynRcvd || state.is_synchronized()
}

fn eligible(kind: MutationKind, c: &ReceiveContext) -> bool {
    match kind {
        MutationKind::OrderSwap => {
            checks_order(c.state.state) && c.segment.consumes() > 0 && c.next_from_sender.is_some()
        }
        MutationKind::OrderSeqJump => checks_order(c.state.state),
        MutationKind::FlagIllegalCombo => true,
        MutationKind::FlagWrongState => c.state.state.is_synchronized(),
    }
}

fn mutate(kind: MutationKind, c: &ReceiveContext, rng: &mut ChaCha8Rng) -> Segment {
    match kind {
        MutationKind::OrderSwap => c.next_from_sender.clone().expect("eligibility checked"),
        MutationKind::OrderSeqJump => {
            let off = rng.random_range(SEQ_JUMP_RANGE.0..=SEQ_JUMP_RANGE.1);
            c.segment.with_seq(c.segment.seq().add(off))
        }
        MutationKind::FlagIllegalCombo => c.segment.with_flags(TcpFlags::SYN | TcpFlags::FIN),
        MutationKind::FlagWrongState => {
            let f = *wrong_state_flags().choose(rng).expect("non-empty");
            c.segment.with_flags(f)
        }
    }
}

/// Builds `count` rejected-segment samples, `round(count * order_ratio)` of them order errors.
pub fn generate_error_dataset(
    contexts: &[ReceiveContext],
    count: usize,
    order_ratio: f64,
    seed: u64,
) -> Result<Vec<LabeledSample>, ErrorDatasetError> {
    if count < 2 {
        return Err(ErrorDatasetError::CountTooSmall(count));
    }
    if !(0.0..=1.0).contains(&order_ratio) {
        return Err(ErrorDatasetError::BadRatio(order_ratio));
    }
    let n_order = (count as f64 * order_ratio).round() as usize;
    let n_flag = count - n_order;

    let pools: Vec<Vec<&ReceiveContext>> = MutationKind::ALL
        .iter()
        .map(|&k| contexts.iter().filter(|c| eligible(k, c)).collect())
        .collect();
    let pool = |k: MutationKind| &pools[MutationKind::ALL.iter().position(|&x| x == k).expect("listed")];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for (n, kinds) in [
        (n_order, [MutationKind::OrderSwap, MutationKind::OrderSeqJump]),
        (n_flag, [MutationKind::FlagIllegalCombo, MutationKind::FlagWrongState]),
    ] {
        if n == 0 {
            continue;
        }
        let usable: Vec<MutationKind> = kinds.into_iter().filter(|&k| !pool(k).is_empty()).collect();
        if usable.is_empty() {
            return Err(ErrorDatasetError::InsufficientContexts(kinds[1]));
        }
        for _ in 0..n {
            let kind = *usable.choose(&mut rng).expect("non-empty");
            let ctx = *pool(kind).choose(&mut rng).expect("non-empty");
            let mutated = mutate(kind, ctx, &mut rng);
            let verdict = kind.verdict();
            debug_assert_eq!(oracle_transition(&ctx.state, Some(&mutated), &LocalAction::None).verdict, verdict);
            out.push(LabeledSample {
                input: CognitiveInput { state: ctx.state.clone(), received: Some(mutated), action: LocalAction::None },
                label: CognitiveDecision::reject(ctx.state.state, verdict),
                provenance: Provenance::Mutation { kind, flow_id: ctx.flow_id, record_index: ctx.record_index },
                observed: None,
            });
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Convenience for checks: does the oracle agree with the sample's verdict?
pub fn oracle_agrees(sample: &LabeledSample) -> bool {
    oracle_transition(&sample.input.state, sample.input.received.as_ref(), &sample.input.action).verdict
        == sample.label.verdict
}

