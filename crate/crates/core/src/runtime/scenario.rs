use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::tcp::Role;

pub const DEFAULT_STEPS_BUDGET: u32 = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CloseMode {
    /// FIN, ACK, FIN, ACK.
    #[default]
    FourWay,
    /// FIN, FIN|ACK, ACK.
    Piggyback,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataItem {
    pub side: Role,
    pub payload_len: u32,
}

/// Script for one full-lifecycle session.
///
/// Consecutive data items from the same side are sent back to back before
/// the peer gets to answer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_id")]
    pub id: String,
    pub data_script: Vec<DataItem>,
    pub closer: Role,
    #[serde(default)]
    pub close_mode: CloseMode,
    #[serde(default = "default_budget")]
    pub steps_budget: u32,
}

fn default_id() -> String {
    "scenario".to_string()
}

fn default_budget() -> u32 {
    DEFAULT_STEPS_BUDGET
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("reading scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.data_script.iter().any(|d| d.payload_len == 0) {
            return Err(ScenarioError::Invalid("data items need payload_len > 0".into()));
        }
        if self.steps_budget == 0 {
            return Err(ScenarioError::Invalid("steps_budget must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        s.validate()?;
        Ok(s)
    }
}

impl Default for Scenario {
    /// Two back-to-back client writes, one server write, client-initiated four-way close.
    fn default() -> Self {
        Scenario {
            id: "default".to_string(),
            data_script: vec![
                DataItem { side: Role::Client, payload_len: 512 },
                DataItem { side: Role::Client, payload_len: 256 },
                DataItem { side: Role::Server, payload_len: 1024 },
            ],
            closer: Role::Client,
            close_mode: CloseMode::FourWay,
            steps_budget: DEFAULT_STEPS_BUDGET,
        }
    }
}
