//! Command-line driver: simulate, monitor, mine, explain, or run every
//! phase at once.

mod files;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpsexplain::manifest::ModelManifest;
use cpsexplain::miner::{parse_spec, render_spec};
use cpsexplain::pipeline::{
    self, explain_trace, mine_passing, monitor, run_pipeline, NamedTrace, PipelineError,
    ReductionSummary, Report, Thresholds,
};
use cpsexplain::plant::{
    self, generate_suite, parse_faults, PlantConfig, AMPLITUDE_RANGE, PERIOD_RANGE,
};
use cpsexplain::stl::{parse_formula, Formula};
use cpsexplain::trace::Verdict;

use files::{load_traces, read_text, write_atomic};

#[derive(Parser)]
#[command(
    name = "cpsexplain",
    version,
    about = "Explain requirement failures in simulation traces"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the plant simulator over a grid of pilot commands.
    Simulate(SimulateArgs),
    /// Label traces Pass or Fail against the requirement.
    Monitor(MonitorArgs),
    /// Mine invariants from the passing traces.
    Mine(MineArgs),
    /// Explain failing traces with a mined specification.
    Explain(ExplainArgs),
    /// Monitor, mine and explain in one run.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Plant configuration (JSON); defaults to the built-in plant.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Faults (JSON list) injected into every run.
    #[arg(long)]
    faults: Option<PathBuf>,
    /// Number of runs on the amplitude x period grid.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// File name prefix of the emitted traces.
    #[arg(long, default_value = "run_")]
    prefix: String,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    manifest: PathBuf,
    /// A trace CSV or a directory of them.
    #[arg(long)]
    traces: PathBuf,
    /// Requirement formula, or a file holding it; defaults to the manifest's.
    #[arg(long)]
    requirement: Option<String>,
    /// Half-width of the band that `==` accepts.
    #[arg(long, default_value_t = 0.0)]
    eq_tolerance: f64,
}

#[derive(Args)]
struct MiningArgs {
    #[arg(long, default_value_t = 0.99)]
    corr_threshold: f64,
    #[arg(long, default_value_t = 0.99)]
    significance: f64,
    /// Observation grid step; native sample times when omitted.
    #[arg(long)]
    grid_step: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct MonitorArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MineArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    mining: MiningArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for spec.stl and reduction.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Mined specification file.
    #[arg(long)]
    spec: PathBuf,
    /// Reduction report written by `mine`, embedded in the report.
    #[arg(long)]
    reduction: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    elbow_factor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    mining: MiningArgs,
    #[arg(long, default_value_t = 0.05)]
    elbow_factor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for verdicts, specification and report.
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes with their process exit codes.
#[derive(Debug)]
enum Failure {
    Input(String),
    NoPassing(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::NoPassing(_) => 3,
            Failure::Internal(_) => 1,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        use cpsexplain::correlation::CorrelationError;
        use cpsexplain::miner::MinerError;
        let msg = e.to_string();
        match e {
            PipelineError::NoPassingTraces
            | PipelineError::Correlation(CorrelationError::NoPassingTraces)
            | PipelineError::Miner(MinerError::NoPassingTraces) => Failure::NoPassing(msg),
            PipelineError::Trace { .. }
            | PipelineError::Requirement(_)
            | PipelineError::InvalidThreshold { .. }
            | PipelineError::Check(_)
            | PipelineError::Miner(MinerError::SpecSyntax { .. })
            | PipelineError::Miner(MinerError::UnknownVariable(_)) => Failure::Input(msg),
            _ => Failure::Internal(msg),
        }
    }
}

/// Successful outcomes: 0, or 4 when an explanation is inconclusive.
enum Outcome {
    Done,
    Inconclusive,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Monitor(a) => cmd_monitor(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive) => ExitCode::from(4),
        Err(f) => {
            let (Failure::Input(m) | Failure::NoPassing(m) | Failure::Internal(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn simulate(a: SimulateArgs) -> Result<Outcome, Failure> {
    let base = match &a.config {
        Some(p) => serde_json::from_str::<PlantConfig>(&read_text(p)?)
            .map_err(|e| input(format!("{}: {e}", p.display())))?,
        None => PlantConfig::default(),
    };
    let faults = match &a.faults {
        Some(p) => {
            parse_faults(&read_text(p)?).map_err(|e| input(format!("{}: {e}", p.display())))?
        }
        None => Vec::new(),
    };
    let suite = generate_suite(&base, a.n, AMPLITUDE_RANGE, PERIOD_RANGE, a.seed).map_err(input)?;
    let width = a.n.saturating_sub(1).to_string().len().max(3);
    let mut manifest: Option<ModelManifest> = None;
    for (i, cfg) in suite.iter().enumerate() {
        let (trace, m) = plant::simulate(cfg, &faults).map_err(input)?;
        let name = format!("{}{:0width$}.csv", a.prefix, i);
        write_atomic(&a.out.join(name), trace.render_csv().as_bytes())?;
        manifest = Some(m);
    }
    if let Some(m) = manifest {
        write_atomic(&a.out.join("manifest.json"), m.to_json().as_bytes())?;
    }
    log::info!("wrote {} traces to {}", suite.len(), a.out.display());
    Ok(Outcome::Done)
}

struct Loaded {
    manifest: ModelManifest,
    traces: Vec<NamedTrace>,
    requirement: Formula,
}

fn load_inputs(i: &Inputs) -> Result<Loaded, Failure> {
    let manifest = ModelManifest::from_json(&read_text(&i.manifest)?)
        .map_err(|e| input(format!("{}: {e}", i.manifest.display())))?;
    let requirement = match &i.requirement {
        None => manifest.requirement_formula(),
        Some(r) => {
            let text = if Path::new(r).is_file() {
                read_text(Path::new(r))?
            } else {
                r.clone()
            };
            parse_formula(text.trim()).map_err(|e| input(format!("requirement: {e}")))?
        }
    };
    let traces = load_traces(&i.traces, &manifest)?;
    Ok(Loaded {
        manifest,
        traces,
        requirement,
    })
}

fn verdict_table(verdicts: &[pipeline::TraceVerdict]) -> String {
    verdicts
        .iter()
        .map(|v| format!("{}\t{}\n", v.trace, v.verdict))
        .collect()
}

fn cmd_monitor(a: MonitorArgs) -> Result<Outcome, Failure> {
    let mut l = load_inputs(&a.inputs)?;
    let verdicts = monitor(&mut l.traces, &l.requirement)?;
    print!("{}", verdict_table(&verdicts));
    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&verdicts).expect("verdicts serialize") + "\n";
        write_atomic(out, json.as_bytes())?;
    }
    Ok(Outcome::Done)
}

fn thresholds(
    m: Option<&MiningArgs>,
    elbow_factor: f64,
    eq_tolerance: f64,
) -> Result<Thresholds, Failure> {
    let d = Thresholds::default();
    let t = Thresholds {
        corr: m.map_or(d.corr, |m| m.corr_threshold),
        significance: m.map_or(d.significance, |m| m.significance),
        grid_step: m.and_then(|m| m.grid_step),
        elbow_factor,
        eq_tolerance,
    };
    t.validate()?;
    Ok(t)
}

fn write_mining(out: &Path, mined: &pipeline::MiningResult) -> Result<String, Failure> {
    let spec = render_spec(&mined.properties);
    write_atomic(&out.join("spec.stl"), spec.as_bytes())?;
    let reduction =
        serde_json::to_string_pretty(&mined.reduction).expect("reduction serializes") + "\n";
    write_atomic(&out.join("reduction.json"), reduction.as_bytes())?;
    Ok(spec)
}

fn cmd_mine(a: MineArgs) -> Result<Outcome, Failure> {
    let t = thresholds(Some(&a.mining), 0.05, a.inputs.eq_tolerance)?;
    let mut l = load_inputs(&a.inputs)?;
    monitor(&mut l.traces, &l.requirement)?;
    let mined = mine_passing(&l.traces, &l.manifest, &t)?;
    write_mining(&a.out, &mined)?;
    println!(
        "{} variables, {} significant, {} properties (seed {})",
        l.manifest.variables.len(),
        mined.reduction.significant(&l.manifest).len(),
        mined.properties.len(),
        a.seed
    );
    Ok(Outcome::Done)
}

fn finish(report: &Report) -> Outcome {
    if report.is_inconclusive() {
        Outcome::Inconclusive
    } else {
        Outcome::Done
    }
}

fn cmd_explain(a: ExplainArgs) -> Result<Outcome, Failure> {
    let t = thresholds(None, a.elbow_factor, a.inputs.eq_tolerance)?;
    let mut l = load_inputs(&a.inputs)?;
    let spec_text = read_text(&a.spec)?;
    let spec = parse_spec(&spec_text).map_err(input)?;
    let reduction = match &a.reduction {
        Some(p) => Some(ReductionSummary::new(
            serde_json::from_str(&read_text(p)?)
                .map_err(|e| input(format!("{}: {e}", p.display())))?,
        )),
        None => None,
    };
    let verdicts = monitor(&mut l.traces, &l.requirement)?;
    // a single file is explained whatever its verdict; a directory only for its failing traces
    let single = a.inputs.traces.is_file();
    let explanations = l
        .traces
        .iter()
        .filter(|tr| single || tr.trace.verdict() == Some(Verdict::Fail))
        .map(|tr| explain_trace(tr, &spec, &l.manifest, &t))
        .collect::<Result<Vec<_>, _>>()?;
    let report = Report {
        requirement: l.requirement.to_string(),
        seed: a.seed,
        thresholds: t,
        spec_sha256: pipeline::sha256_hex(spec_text.as_bytes()),
        property_count: spec.len(),
        traces: verdicts,
        reduction,
        explanations,
    };
    let body = match a.format {
        Format::Json => report.to_json(),
        Format::Text => report.render_text(),
    };
    write_atomic(&a.out, body.as_bytes())?;
    print!("{}", report.render_text());
    Ok(finish(&report))
}

fn cmd_pipeline(a: PipelineArgs) -> Result<Outcome, Failure> {
    let t = thresholds(Some(&a.mining), a.elbow_factor, a.inputs.eq_tolerance)?;
    let mut l = load_inputs(&a.inputs)?;
    let (report, mined, _) = run_pipeline(&mut l.traces, &l.manifest, &l.requirement, &t, a.seed)?;
    let verdicts = serde_json::to_string_pretty(&report.traces).expect("verdicts serialize") + "\n";
    write_atomic(&a.out.join("verdicts.json"), verdicts.as_bytes())?;
    write_mining(&a.out, &mined)?;
    write_atomic(&a.out.join("report.json"), report.to_json().as_bytes())?;
    write_atomic(&a.out.join("report.txt"), report.render_text().as_bytes())?;
    print!("{}", report.render_text());
    Ok(finish(&report))
}
