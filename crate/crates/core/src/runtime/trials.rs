use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cognitive::CognitiveCore;
use crate::par::{self, Execution};
use crate::eval::pct2;

use super::scenario::Scenario;
use super::session::{run_session_with, SessionOptions, SessionTranscript};

#[derive(Clone, Debug, Default)]
pub struct TrialConfig {
    pub sessions: usize,
    pub base_seed: u64,
    pub scenario: Scenario,
    pub options: SessionOptions,
    pub execution: Execution,
}

/// Phase-level and end-to-end success over a batch of sessions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub sessions: usize,
    pub handshake_passes: usize,
    pub data_transfer_passes: usize,
    pub termination_passes: usize,
    pub trial_passes: usize,
    pub handshake: f64,
    pub data_transfer: f64,
    pub termination: f64,
    pub trial_accuracy: f64,
    pub seeds: Vec<u64>,
}

impl TrialReport {
    pub fn from_transcripts(ts: &[SessionTranscript]) -> Self {
        let n = ts.len();
        let count = |f: &dyn Fn(&SessionTranscript) -> bool| ts.iter().filter(|t| f(t)).count();
        let handshake_passes = count(&|t| t.phase_results.handshake.passed());
        let data_transfer_passes = count(&|t| t.phase_results.data_transfer.passed());
        let termination_passes = count(&|t| t.phase_results.termination.passed());
        let trial_passes = count(&|t| t.phase_results.all_pass());
        let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        TrialReport {
            sessions: n,
            handshake_passes,
            data_transfer_passes,
            termination_passes,
            trial_passes,
            handshake: rate(handshake_passes),
            data_transfer: rate(data_transfer_passes),
            termination: rate(termination_passes),
            trial_accuracy: rate(trial_passes),
            seeds: ts.iter().map(|t| t.rng_seed).collect(),
        }
    }

    pub fn render_table(&self, label: &str) -> String {
        let mut out = format!("{:<16}| {label}\n", "Metric");
        out.push_str(&format!("{:-<16}+{:-<width$}\n", "", "", width = label.len().max(8) + 2));
        for (name, v) in [
            ("Handshake", self.handshake),
            ("Data Transfer", self.data_transfer),
            ("Termination", self.termination),
        ] {
            out.push_str(&format!("{name:<16}| {}\n", pct2(v)));
        }
        out.push_str(&format!("{:-<16}+{:-<width$}\n", "", "", width = label.len().max(8) + 2));
        out.push_str(&format!("{:<16}| {}\n", "Trial Accuracy", pct2(self.trial_accuracy)));
        out
    }
}

pub struct TrialRun {
    pub report: TrialReport,
    pub transcripts: Vec<SessionTranscript>,
}

/// Session seeds derived from `base_seed`.
pub fn session_seeds(base_seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

pub fn run_trials(client_core: &dyn CognitiveCore, server_core: &dyn CognitiveCore, config: &TrialConfig) -> TrialRun {
    run_trials_with(config, |_| (client_core, server_core))
}

/// Like [`run_trials`], with the cores chosen per session index.
pub fn run_trials_with<'c, F>(config: &TrialConfig, cores: F) -> TrialRun
where
    F: Fn(usize) -> (&'c dyn CognitiveCore, &'c dyn CognitiveCore) + Sync + Send,
{
    let seeds = session_seeds(config.base_seed, config.sessions);
    let transcripts = par::map_range(config.execution, seeds.len(), |i| {
        let (client, server) = cores(i);
        run_session_with(client, server, &config.scenario, seeds[i], &config.options)
    });
    TrialRun { report: TrialReport::from_transcripts(&transcripts), transcripts }
}
