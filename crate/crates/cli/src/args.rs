use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "smart-tcp", version, about = "TCP agent simulator, dataset pipeline and evaluator")]
pub struct Cli {
    /// `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run full-lifecycle sessions and grade them.
    Simulate(SimulateArgs),
    /// Turn a trace file into supervised samples.
    Trace2sft(Trace2SftArgs),
    /// Ask a core for every sample in an SFT file and record its predictions.
    Predict(PredictArgs),
    /// Score a prediction file.
    Evaluate(EvaluateArgs),
    /// Replay a recorded session with one delivery fault.
    Inject(InjectArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoreKind {
    Oracle,
    Remote,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PromptArg {
    FineTuned,
    FewShot,
}

impl PromptArg {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptArg::FineTuned => "fine-tuned",
            PromptArg::FewShot => "few-shot",
        }
    }
}

#[derive(Debug, Args)]
pub struct CoreArgs {
    #[arg(long, value_enum, default_value = "oracle")]
    pub core: CoreKind,
    /// Chat-completion endpoint for `--core remote`.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, value_enum)]
    pub prompt: Option<PromptArg>,
    /// Number of worked examples in few-shot mode.
    #[arg(long)]
    pub few_shot: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub core: CoreArgs,
    #[arg(long)]
    pub sessions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scenario JSON file; the built-in script is used otherwise.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Directory for transcripts and the trial report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the delivered segments as a trace file.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    #[arg(long)]
    pub isn_min: Option<u32>,
    #[arg(long)]
    pub isn_max: Option<u32>,
    /// Run sessions one after another.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SftFormatArg {
    Pairs,
    Instruct,
}

#[derive(Debug, Args)]
pub struct Trace2SftArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "pairs")]
    pub format: SftFormatArg,
    /// Append this many error samples.
    #[arg(long, default_value_t = 0)]
    pub errors: usize,
    /// Share of order errors among the error samples.
    #[arg(long, default_value_t = 0.5)]
    pub error_ratio: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub core: CoreArgs,
    /// SFT file in either format.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormatArg {
    Text,
    Machine,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormatArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    None,
    ReorderSwap,
    FlagMutate,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    /// Transcript written by `simulate`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub fault: FaultArg,
    /// Segment position in delivery order.
    #[arg(long)]
    pub index: Option<usize>,
    /// Replacement flags for `flag-mutate`, e.g. `SYN|FIN`.
    #[arg(long)]
    pub flags: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}
