//! The agent loop and the dual-agent session harness.

mod agent;
mod fault;
mod grading;
mod scenario;
mod session;
mod trials;

pub use agent::{agent_step, Agent, AgentEvent, StepError, StepOutcome};
pub use fault::{inject_fault, FaultError, FaultKind, FaultSpec};
pub use grading::{grade, PhaseResult, PhaseResults};
pub use scenario::{CloseMode, DataItem, Scenario, ScenarioError, DEFAULT_STEPS_BUDGET};
pub use session::{
    run_session, run_session_with, Direction, FinalStates, Halt, IsnRange, SessionOptions, SessionTranscript,
    TranscriptIoError, TranscriptRecord,
};
pub use trials::{run_trials, run_trials_with, session_seeds, TrialConfig, TrialReport, TrialRun};
