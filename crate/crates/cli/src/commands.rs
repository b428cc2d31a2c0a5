use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::Path;

use log::info;
use smart_tcp::cognitive::{CognitiveCore, CoreError, ReferenceOracle, RemoteCore};
use smart_tcp::dataset::{
    emit_sft, extract_flows, generate_error_dataset, ingest_trace, load_sft, reconstruct_flows, transcript_to_trace,
    write_trace, FlowSummary, SftFormat, TraceError,
};
use smart_tcp::eval::{
    build_report, load_predictions, predict_batch, render_machine, render_text, write_predictions, EvalError,
};
use smart_tcp::par::Execution;
use smart_tcp::runtime::{
    inject_fault, run_session_with, run_trials, FaultSpec, Halt, Scenario, ScenarioError, SessionOptions,
    SessionTranscript, TrialConfig,
};
use smart_tcp::tcp::flags_parse;

use crate::args::*;
use crate::config::{Config, FileConfig, Overrides};
use crate::error::{CliError, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn load_config(path: Option<&Path>, overrides: Overrides) -> Result<Config> {
    let file = match path {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    Config::resolve(file, overrides)
}

fn core_overrides(core: &CoreArgs) -> Overrides {
    Overrides {
        endpoint: core.endpoint.clone(),
        prompt: core.prompt.map(|p| p.as_str().to_string()),
        few_shot: core.few_shot,
        ..Default::default()
    }
}

fn build_core(kind: CoreKind, cfg: &Config) -> Result<Box<dyn CognitiveCore>> {
    Ok(match kind {
        CoreKind::Oracle => Box::new(ReferenceOracle),
        CoreKind::Remote => Box::new(RemoteCore::new(cfg.remote()?, cfg.prompt_config())),
    })
}

fn execution(sequential: bool) -> Execution {
    if sequential { Execution::Sequential } else { Execution::default() }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => simulate(config, a),
        Command::Trace2sft(a) => trace2sft(config, a),
        Command::Predict(a) => predict(config, a),
        Command::Evaluate(a) => evaluate(a),
        Command::Inject(a) => inject(a),
    }
}

/// Client side of session `i` in exported traces.
fn client_addr(i: usize) -> SocketAddr {
    SocketAddr::from(([10, 0, 0, 1], 1024 + (i % 64_000) as u16))
}

fn server_addr() -> SocketAddr {
    SocketAddr::from(([10, 0, 0, 2], 80))
}

fn simulate(config: Option<&Path>, a: SimulateArgs) -> Result<()> {
    let mut ov = core_overrides(&a.core);
    ov.seed = a.seed;
    ov.sessions = a.sessions;
    ov.isn_min = a.isn_min;
    ov.isn_max = a.isn_max;
    let cfg = load_config(config, ov)?;
    if cfg.sessions == 0 {
        return Err(CliError::Usage("--sessions must be at least 1".into()));
    }
    let scenario = match &a.scenario {
        Some(p) => Scenario::load(p).map_err(|e| match e {
            ScenarioError::Io(io) => CliError::io(p, io),
            other => CliError::Config(format!("{}: {other}", p.display())),
        })?,
        None => {
            let mut s = Scenario::default();
            if let Some(b) = cfg.steps_budget {
                s.steps_budget = b;
            }
            s
        }
    };
    let core = build_core(a.core.core, &cfg)?;
    let trial = TrialConfig {
        sessions: cfg.sessions,
        base_seed: cfg.seed,
        scenario,
        options: SessionOptions { isn: cfg.isn, ..Default::default() },
        execution: execution(a.sequential),
    };
    info!("running {} sessions with the {} core", trial.sessions, core.name());
    let run = run_trials(&*core, &*core, &trial);

    let label = match a.core.core {
        CoreKind::Oracle => "Oracle",
        CoreKind::Remote => "Remote",
    };
    let table = run.report.render_table(label);
    print!("{table}");
    for (i, t) in run.transcripts.iter().enumerate() {
        if !t.phase_results.all_pass() {
            let why = t.halt.as_ref().map_or_else(|| "graded FAIL".to_string(), Halt::describe);
            println!("session {i} (seed {}): {why}", t.rng_seed);
        }
    }

    if let Some(dir) = a.out.as_ref().or(cfg.out_dir.as_ref()) {
        for (i, t) in run.transcripts.iter().enumerate() {
            let path = dir.join("transcripts").join(format!("session-{i:03}.jsonl"));
            let mut w = create(&path)?;
            t.write_jsonl(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        }
        let json = serde_json::to_string_pretty(&run.report).expect("report serializes");
        write_file(&dir.join("report.json"), &(json + "\n"))?;
        write_file(&dir.join("report.txt"), &table)?;
    }
    if let Some(path) = &a.trace_out {
        let records: Vec<_> = run
            .transcripts
            .iter()
            .enumerate()
            .flat_map(|(i, t)| transcript_to_trace(t, client_addr(i), server_addr(), i as f64 * 10.0))
            .collect();
        let mut w = create(path)?;
        write_trace(&records, &mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))?;
    }

    if let Some(Halt::Transport { message, .. }) =
        run.transcripts.iter().find_map(|t| t.halt.as_ref().filter(|h| matches!(h, Halt::Transport { .. })))
    {
        return Err(CliError::Transport(message.clone()));
    }
    Ok(())
}

fn trace2sft(config: Option<&Path>, a: Trace2SftArgs) -> Result<()> {
    let cfg = load_config(config, Overrides { seed: a.seed, ..Default::default() })?;
    let ingested = ingest_trace(&a.input).map_err(|e| match e {
        TraceError::Io(io) => CliError::io(&a.input, io),
        other => CliError::io(&a.input, other),
    })?;
    for r in &ingested.rejects {
        log::warn!("{}:{}: {}", a.input.display(), r.line, r.reason);
    }
    let flows = extract_flows(&ingested.records);
    let summary = FlowSummary::of(&flows);

    let mut samples = Vec::new();
    let mut contexts = Vec::new();
    let (mut skipped, mut dropped) = (0usize, 0usize);
    for result in reconstruct_flows(&flows, Execution::default()) {
        match result {
            Ok(f) => {
                skipped += f.skipped.len();
                samples.extend(f.samples);
                contexts.extend(f.contexts);
            }
            Err(e) => {
                log::warn!("{e}");
                dropped += 1;
            }
        }
    }
    let mut n_errors = 0;
    if a.errors > 0 {
        let errs = generate_error_dataset(&contexts, a.errors, a.error_ratio, cfg.seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        n_errors = errs.len();
        samples.extend(errs);
    }
    let format = match a.format {
        SftFormatArg::Pairs => SftFormat::Pairs,
        SftFormatArg::Instruct => SftFormat::Instruct,
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    emit_sft(&samples, &a.out, format).map_err(|e| CliError::io(&a.out, e))?;

    println!("{} flows, {} packets", summary.complete, summary.packets);
    println!(
        "{} samples written ({} error samples); {} incomplete flows discarded, {} flows dropped, {} segments skipped, {} malformed lines",
        samples.len(),
        n_errors,
        summary.flows - summary.complete,
        dropped,
        skipped,
        ingested.rejects.len()
    );
    Ok(())
}

fn predict(config: Option<&Path>, a: PredictArgs) -> Result<()> {
    let cfg = load_config(config, core_overrides(&a.core))?;
    let samples = load_sft(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let core = build_core(a.core.core, &cfg)?;
    let preds = predict_batch(&*core, &samples, execution(a.sequential)).map_err(|e| match e {
        CoreError::Transport(m) => CliError::Transport(m),
        other => CliError::Transport(other.to_string()),
    })?;
    let malformed = preds.iter().filter(|p| p.predicted.is_malformed()).count();
    let mut w = create(&a.out)?;
    write_predictions(&preds, &mut w).map_err(|e| CliError::io(&a.out, e))?;
    println!("{} predictions, {} malformed", preds.len(), malformed);
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let set = load_predictions(&a.pred).map_err(|e| CliError::io(&a.pred, e))?;
    let report = build_report(&set).map_err(|e| match e {
        EvalError::Empty => CliError::io(&a.pred, "no scorable prediction records"),
        other => CliError::Usage(other.to_string()),
    })?;
    let text = match a.format {
        ReportFormatArg::Text => render_text(&report),
        ReportFormatArg::Machine => render_machine(&report) + "\n",
    };
    print!("{text}");
    if let Some(out) = &a.out {
        write_file(out, &text)?;
    }
    Ok(())
}

fn inject(a: InjectArgs) -> Result<()> {
    let file = File::open(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let original = SessionTranscript::read_jsonl(BufReader::new(file)).map_err(|e| CliError::io(&a.input, e))?;
    let fault = match a.fault {
        FaultArg::None => {
            if a.index.is_some() || a.flags.is_some() {
                return Err(CliError::Usage("--fault none takes no --index or --flags".into()));
            }
            FaultSpec::none()
        }
        FaultArg::ReorderSwap => {
            let i = a.index.ok_or_else(|| CliError::Usage("--fault reorder-swap needs --index".into()))?;
            FaultSpec::reorder_swap(i)
        }
        FaultArg::FlagMutate => {
            let i = a.index.ok_or_else(|| CliError::Usage("--fault flag-mutate needs --index".into()))?;
            let text = a.flags.as_deref().ok_or_else(|| CliError::Usage("--fault flag-mutate needs --flags".into()))?;
            let flags = flags_parse(text).map_err(|e| CliError::Usage(format!("--flags: {e}")))?;
            FaultSpec::flag_mutate(i, flags)
        }
    };
    inject_fault(&original.segments(), &fault).map_err(|e| CliError::Usage(e.to_string()))?;

    let oracle = ReferenceOracle;
    let opts = SessionOptions { isn: original.isn_range, fault };
    let replay = run_session_with(&oracle, &oracle, &original.scenario, original.rng_seed, &opts);
    let mut w = create(&a.out)?;
    replay.write_jsonl(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&a.out, e))?;

    let outcome = replay.halt.as_ref().map_or_else(|| "completed".to_string(), Halt::describe);
    println!("fault applied: {}; {outcome}", if replay.fault_applied { "yes" } else { "no" });
    let p = &replay.phase_results;
    println!("handshake: {:?}; data transfer: {:?}; termination: {:?}", p.handshake, p.data_transfer, p.termination);
    Ok(())
}
