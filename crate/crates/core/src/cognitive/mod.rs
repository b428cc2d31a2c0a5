//! The decision-core boundary.
//!
//! A [`CognitiveCore`] maps `(state, received segment, local action)` to the
//! next state, the control flags and payload length of the reply, and the
//! [`AluTask`] that will fill in the numbers. Two implementations ship: the
//! [`ReferenceOracle`] state machine and the HTTP [`RemoteCore`].

mod decision;
mod oracle;
mod parse;
mod prompt;
mod remote;

pub use decision::{CognitiveDecision, CognitiveInput, InputError, Verdict};
pub use oracle::{oracle_transition, ReferenceOracle};
pub use parse::{parse_decision, MalformedDecision};
pub use prompt::{build_prompt, default_few_shot, ChatMessage, PromptBundle, PromptConfig, PromptMode, DEFAULT_PERSONA};
pub use remote::{RemoteConfig, RemoteCore, ENV_MODEL_ENDPOINT, ENV_MODEL_KEY};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error(transparent)]
    Malformed(#[from] MalformedDecision),
}

/// Anything that can take protocol decisions for an agent.
pub trait CognitiveCore: Send + Sync {
    fn decide(&self, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError>;

    fn name(&self) -> &str {
        "core"
    }
}

impl<C: CognitiveCore + ?Sized> CognitiveCore for &C {
    fn decide(&self, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError> {
        (**self).decide(input)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<C: CognitiveCore + ?Sized> CognitiveCore for Box<C> {
    fn decide(&self, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError> {
        (**self).decide(input)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<C: CognitiveCore + ?Sized> CognitiveCore for std::sync::Arc<C> {
    fn decide(&self, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError> {
        (**self).decide(input)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

pub fn decide(core: &dyn CognitiveCore, input: &CognitiveInput) -> Result<CognitiveDecision, CoreError> {
    core.decide(input)
}
