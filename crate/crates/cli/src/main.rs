use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use confscreen::ingest::EXCLUSION_THRESHOLD;
use confscreen::metrics::{compute_metrics, item_difficulty, CEILING_THRESHOLD};
use confscreen::report::parse_json_report;
use confscreen::trial::BINARISE_THRESHOLD;
use confscreen::{
    emit_report, evaluate_all, generate_cell, group_cells, read_trials, write_trials, Cell, Condition, EvalConfig,
    GenSpec, MetricsReport, ReportFormat, Tier, TrialFormat,
};
use confscreen_collector::{read_items, run_condition, CollectorConfig};
use serde::Serialize;

const EXIT_INPUT: u8 = 1;
const EXIT_INVALID: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "confscreen",
    version,
    about = "Validity screening and metacognitive metrics for elicited LLM confidence",
    after_help = "Protocol defaults:\n  \
        binarisation threshold  0.50  (confidence >= 0.50 is HIGH)\n  \
        ceiling threshold       0.95  (confidence >= 0.95 counts as ceiling)\n  \
        exclusion threshold     0.30  (cells with parse failure > 30% are excluded)\n\
        Overriding any of these stamps the report and prints a warning.\n\n\
        Exit status: 0 success, 1 input error, 2 INVALID cell with --fail-on-invalid."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Query a chat-completions endpoint for every item and write trials.
    Collect(CollectArgs),
    /// Screen each model x condition cell and report tiers and metrics.
    Screen(ScreenArgs),
    /// Compute metrics only (ceiling, AUROC2, ridge R2, correlations, split-half, MAR).
    Metrics(MetricsArgs),
    /// Generate synthetic trials with controllable ceiling, accuracy and AUROC2.
    Simulate(SimulateArgs),
    /// Render a JSON screening report as a text table.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CondArg {
    Num,
    Cat,
}

impl From<CondArg> for Condition {
    fn from(c: CondArg) -> Self {
        match c {
            CondArg::Num => Condition::Num,
            CondArg::Cat => Condition::Cat,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormatArg {
    Auto,
    Jsonl,
    Csv,
}

impl FormatArg {
    fn resolve(self, path: Option<&Path>) -> TrialFormat {
        match (self, path) {
            (FormatArg::Jsonl, _) => TrialFormat::Jsonl,
            (FormatArg::Csv, _) => TrialFormat::Csv,
            (FormatArg::Auto, Some(p)) => TrialFormat::from_path(p),
            (FormatArg::Auto, None) => TrialFormat::Jsonl,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ReportFormatArg {
    Json,
    Text,
}

impl From<ReportFormatArg> for ReportFormat {
    fn from(f: ReportFormatArg) -> Self {
        match f {
            ReportFormatArg::Json => ReportFormat::Json,
            ReportFormatArg::Text => ReportFormat::TextTable,
        }
    }
}

#[derive(Args, Debug)]
struct CollectArgs {
    /// Chat-completions URL.
    #[arg(long, env = "CONFSCREEN_ENDPOINT")]
    endpoint: String,
    #[arg(long)]
    model: String,
    #[arg(long, value_enum)]
    condition: CondArg,
    /// JSONL items file with item_id, question, gold_aliases.
    #[arg(long)]
    items: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    /// Requests in flight.
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[arg(long)]
    max_tokens: Option<u32>,
    /// Defaults to "<model>-<condition>-s<seed>".
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Args, Debug)]
struct Thresholds {
    /// Confidence at or above this is HIGH. Protocol value 0.50.
    #[arg(long, default_value_t = BINARISE_THRESHOLD)]
    binarise_threshold: f64,
    /// Confidence at or above this is at ceiling. Protocol value 0.95.
    #[arg(long, default_value_t = CEILING_THRESHOLD)]
    ceiling_threshold: f64,
    /// Cells with parse failure above this share are excluded. Protocol value 0.30.
    #[arg(long, default_value_t = EXCLUSION_THRESHOLD)]
    exclusion_threshold: f64,
}

impl Thresholds {
    fn config(&self) -> Result<EvalConfig> {
        for (name, v) in [
            ("binarise-threshold", self.binarise_threshold),
            ("ceiling-threshold", self.ceiling_threshold),
            ("exclusion-threshold", self.exclusion_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                bail!("--{name} must lie in [0, 1], got {v}");
            }
        }
        let config = EvalConfig::with_thresholds(self.binarise_threshold, self.ceiling_threshold, self.exclusion_threshold);
        for line in &config.stamp().non_default {
            eprintln!("WARNING: NON-DEFAULT THRESHOLD {line}; results are not comparable with the protocol");
        }
        Ok(config)
    }
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Trial files (JSONL or CSV). Repeatable.
    #[arg(long = "input", short = 'i', required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// Output file; standard output when omitted.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScreenArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "json")]
    report_format: ReportFormatArg,
    #[command(flatten)]
    thresholds: Thresholds,
    /// Exit with status 2 when any cell is INVALID.
    #[arg(long)]
    fail_on_invalid: bool,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    thresholds: Thresholds,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// Trials per cell.
    #[arg(long, default_value_t = 524)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of synthetic models.
    #[arg(long, default_value_t = 1)]
    models: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "num")]
    conditions: Vec<CondArg>,
    #[arg(long, default_value = "sim")]
    model_prefix: String,
    #[arg(long, default_value_t = 0.5)]
    accuracy: f64,
    /// Share of trials with confidence >= 0.95.
    #[arg(long, default_value_t = 0.0)]
    ceiling_mass: f64,
    /// Lower end of the uniform off-ceiling confidence range.
    #[arg(long, default_value_t = 0.0)]
    off_lo: f64,
    /// Upper end of the off-ceiling range (at most 0.95).
    #[arg(long, default_value_t = CEILING_THRESHOLD)]
    off_hi: f64,
    #[arg(long, default_value_t = 0.0)]
    parse_fail_correct: f64,
    #[arg(long, default_value_t = 0.0)]
    parse_fail_incorrect: f64,
    /// Planted R2 of confidence on logprob_mean.
    #[arg(long)]
    logprob_r2: Option<f64>,
    /// Planted partial correlation of trace length with confidence.
    #[arg(long, allow_negative_numbers = true)]
    trace_rho: Option<f64>,
    #[arg(long)]
    target_auroc2: Option<f64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// JSON report written by `screen`.
    #[arg(long, short = 'i')]
    input: PathBuf,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Collect(args) => collect(args)?,
        Command::Screen(args) => return screen(args),
        Command::Metrics(args) => metrics(args)?,
        Command::Simulate(args) => simulate(args)?,
        Command::Report(args) => report(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn write_output(out: Option<&Path>, contents: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, contents).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(contents)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load_cells(input: &InputArgs) -> Result<Vec<Cell>> {
    let mut trials = Vec::new();
    for path in &input.inputs {
        let outcome = read_trials(path, input.format.resolve(Some(path)))?;
        for bad in &outcome.errors {
            eprintln!("warning: {}:{}: skipped malformed line: {}", path.display(), bad.line, bad.message);
        }
        trials.extend(outcome.trials);
    }
    if trials.is_empty() {
        bail!("no trials in input");
    }
    let (cells, duplicates) = group_cells(trials);
    for d in &duplicates {
        eprintln!("warning: {} {} has {} records for item {}", d.model_id, d.condition, d.count, d.item_id);
    }
    Ok(cells)
}

fn collect(args: CollectArgs) -> Result<()> {
    let items = read_items(&args.items)?;
    let mut config = CollectorConfig::new(args.endpoint, args.model, args.condition.into());
    config.seed = args.seed;
    config.timeout = Duration::from_secs(args.timeout);
    config.retries = args.retries;
    config.parallelism = args.parallelism;
    config.max_tokens = args.max_tokens;
    config.run_id = args.run_id;
    let trials = run_condition(&config, &items)?;
    let mut buf = Vec::new();
    write_trials(&mut buf, &trials, args.format.resolve(Some(&args.out)))?;
    write_output(Some(&args.out), &buf)
}

fn screen(args: ScreenArgs) -> Result<ExitCode> {
    let config = args.thresholds.config()?;
    let cells = load_cells(&args.input)?;
    let results = evaluate_all(&cells, &config);
    let text = emit_report(&results, args.report_format.into())?;
    write_output(args.input.out.as_deref(), text.as_bytes())?;
    if args.fail_on_invalid && results.iter().any(|r| r.screening.tier == Tier::Invalid) {
        return Ok(ExitCode::from(EXIT_INVALID));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CellMetrics {
    model_id: String,
    condition: Condition,
    metrics: MetricsReport,
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let config = args.thresholds.config()?;
    let mut cells = load_cells(&args.input)?;
    cells.sort_by(|x, y| (x.model_id(), x.condition()).cmp(&(y.model_id(), y.condition())));
    let difficulty = item_difficulty(&cells);
    let reports: Vec<CellMetrics> = cells
        .iter()
        .map(|cell| CellMetrics {
            model_id: cell.model_id().to_string(),
            condition: cell.condition(),
            metrics: compute_metrics(cell, &difficulty, &config.metrics),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&reports)?;
    text.push('\n');
    write_output(args.input.out.as_deref(), text.as_bytes())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    if args.models == 0 || args.conditions.is_empty() {
        bail!("--models and --conditions must be nonempty");
    }
    let mut conditions = args.conditions.clone();
    conditions.dedup();
    let mut trials = Vec::new();
    for m in 0..args.models {
        for (c, cond) in conditions.iter().enumerate() {
            let index = (m * conditions.len() + c) as u64;
            let mut spec = GenSpec::new(args.n, args.seed.wrapping_add(index));
            spec.model_id = format!("{}{}", args.model_prefix, m + 1);
            spec.condition = (*cond).into();
            spec.accuracy = args.accuracy;
            spec.ceiling_mass = args.ceiling_mass;
            spec.off_ceiling = (args.ceiling_mass < 1.0).then_some((args.off_lo, args.off_hi));
            spec.parse_fail_rate_correct = args.parse_fail_correct;
            spec.parse_fail_rate_incorrect = args.parse_fail_incorrect;
            spec.planted_logprob_r2 = args.logprob_r2;
            spec.planted_trace_rho = args.trace_rho;
            spec.target_auroc2 = args.target_auroc2;
            trials.extend(generate_cell(&spec)?.cell.into_trials());
        }
    }
    let mut buf = Vec::new();
    write_trials(&mut buf, &trials, args.format.resolve(Some(&args.out)))?;
    write_output(Some(&args.out), &buf)
}

fn report(args: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("cannot read {}", args.input.display()))?;
    let results = parse_json_report(&text).with_context(|| format!("{} is not a screening report", args.input.display()))?;
    let table = emit_report(&results, ReportFormat::TextTable)?;
    write_output(args.out.as_deref(), table.as_bytes())
}
