use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use smart_tcp::cognitive::{PromptConfig, RemoteConfig, ENV_MODEL_ENDPOINT, ENV_MODEL_KEY};
use smart_tcp::runtime::IsnRange;

use crate::error::{CliError, Result};

/// Settings read from the `key = value` config file. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
    /// `fine-tuned` or `few-shot`.
    pub prompt_mode: Option<String>,
    pub few_shot: Option<usize>,
    pub isn_min: Option<u32>,
    pub isn_max: Option<u32>,
    pub seed: Option<u64>,
    pub sessions: Option<usize>,
    pub steps_budget: Option<u32>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SESSIONS: usize = 30;
pub const DEFAULT_FEW_SHOT: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptChoice {
    FineTuned,
    FewShot(usize),
}

/// Effective configuration: flag, then environment, then file, then default.
#[derive(Clone, Debug)]
pub struct Config {
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub timeout: Option<Duration>,
    pub prompt: PromptChoice,
    pub isn: IsnRange,
    pub seed: u64,
    pub sessions: usize,
    pub steps_budget: Option<u32>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub endpoint: Option<String>,
    pub prompt: Option<String>,
    pub few_shot: Option<usize>,
    pub isn_min: Option<u32>,
    pub isn_max: Option<u32>,
    pub seed: Option<u64>,
    pub sessions: Option<usize>,
}

fn env(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn parse_prompt(mode: &str, n: usize) -> Result<PromptChoice> {
    match mode.to_ascii_lowercase().replace('_', "-").as_str() {
        "fine-tuned" | "finetuned" => Ok(PromptChoice::FineTuned),
        "few-shot" | "fewshot" => Ok(PromptChoice::FewShot(n)),
        other => Err(CliError::Config(format!("unknown prompt mode `{other}` (fine-tuned or few-shot)"))),
    }
}

impl Config {
    pub fn resolve(file: FileConfig, cli: Overrides) -> Result<Self> {
        let defaults = IsnRange::default();
        let isn_min = cli.isn_min.or(file.isn_min).unwrap_or(defaults.min);
        let isn_max = cli.isn_max.or(file.isn_max).unwrap_or(defaults.max);
        let isn = IsnRange::new(isn_min, isn_max).map_err(CliError::Config)?;
        let n = cli.few_shot.or(file.few_shot).unwrap_or(DEFAULT_FEW_SHOT);
        let prompt = match cli.prompt.or(file.prompt_mode) {
            Some(mode) => parse_prompt(&mode, n)?,
            None => PromptChoice::FineTuned,
        };
        Ok(Config {
            endpoint: cli.endpoint.or_else(|| env(ENV_MODEL_ENDPOINT)).or(file.endpoint),
            api_key: env(ENV_MODEL_KEY).or(file.api_key),
            model: file.model,
            timeout: file.timeout_secs.map(Duration::from_secs),
            prompt,
            isn,
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            sessions: cli.sessions.or(file.sessions).unwrap_or(DEFAULT_SESSIONS),
            steps_budget: file.steps_budget,
            out_dir: file.out_dir,
        })
    }

    pub fn remote(&self) -> Result<RemoteConfig> {
        let endpoint = self.endpoint.clone().ok_or_else(|| {
            CliError::Config(format!("remote core needs an endpoint (--endpoint, {ENV_MODEL_ENDPOINT} or config file)"))
        })?;
        let mut rc = RemoteConfig::new(endpoint);
        rc.api_key = self.api_key.clone();
        if let Some(m) = &self.model {
            rc.model = m.clone();
        }
        if let Some(t) = self.timeout {
            rc.timeout = t;
        }
        Ok(rc)
    }

    pub fn prompt_config(&self) -> PromptConfig {
        match self.prompt {
            PromptChoice::FineTuned => PromptConfig::fine_tuned(),
            PromptChoice::FewShot(n) => PromptConfig::few_shot(n),
        }
    }
}
