//! `shelf-lab` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 oracle budget refusal,
//! 4 finding under `audit --strict`.

mod formulas;
mod render;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;

use shelf_lab::montecarlo::{self, ExperimentConfig, DEFAULT_CHUNK_SIZE};
use shelf_lab::oracle;
use shelf_lab::shuffle::parse_pile_probs;
use shelf_lab::{word_to_permutation, Error, ShuffleSpec, Statistic};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "shelf-lab", version, about = "Shelf-shuffle simulation and exact verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw random words and print them with their shuffled permutations.
    Sample(SampleArgs),
    /// Run one Monte Carlo experiment.
    Simulate(SimulateArgs),
    /// Enumerate all (2m)^n words and print the exact distribution.
    Oracle(OracleArgs),
    /// Compare closed-form moments with exhaustive enumeration.
    Audit(AuditArgs),
    /// Run one experiment per deck size and tabulate Kolmogorov distances.
    Clt(CltArgs),
    /// Evaluate a closed-form expression exactly.
    Formulas(FormulaArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug)]
struct Output {
    /// Write output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DeckArgs {
    /// Number of cards.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of shelves (2m piles).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    /// JSON file with 2m pile probabilities as "p/q" strings.
    #[arg(long)]
    bias: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    deck: DeckArgs,
    /// Number of words to draw.
    #[arg(long, default_value_t = 1)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE, value_parser = clap::value_parser!(u64).range(1..))]
    chunk_size: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE, value_parser = clap::value_parser!(u64).range(1..))]
    chunk_size: u64,
    /// Worker threads (0 = all cores). Does not change results.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value = "inversions")]
    statistic: Statistic,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    deck: DeckArgs,
    #[command(flatten)]
    run: RunArgs,
    /// json: full report; csv: histogram rows; text: summary.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    deck: DeckArgs,
    #[arg(long, default_value = "inversions")]
    statistic: Statistic,
    /// Maximum number of words to enumerate (default: $SHELF_LAB_BUDGET or 1000000).
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// Deck sizes: a range "2-7" or a list "2,3,5".
    #[arg(long, default_value = "2-7")]
    n: String,
    /// Shelf counts: a range "1-3" or a list.
    #[arg(long, default_value = "1-3")]
    m: String,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Exit with status 4 if any published formula disagrees with the enumeration.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct CltArgs {
    /// Deck sizes, e.g. "10,100,1000".
    #[arg(long, default_value = "10,100,1000")]
    n: String,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    #[arg(long)]
    bias: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    /// csv: summary rows; json: reports and summary; text: table.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct FormulaArgs {
    /// Formula name; run with "list" to see all names.
    name: String,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: Option<u32>,
    #[arg(long)]
    bias: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

/// A failure with its exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::BudgetExceeded { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Clt(args) => cmd_clt(args),
        Command::Formulas(args) => cmd_formulas(args),
    }
}

fn emit(output: &Output, text: &str) -> CliResult<()> {
    match &output.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

/// Reads a bias file: a JSON array of "p/q" strings.
fn read_bias(path: &PathBuf) -> CliResult<Vec<BigRational>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read bias file {}: {e}", path.display())))?;
    let values: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| {
        Failure::usage(format!(
            "bias file {} is not a JSON array: {e}",
            path.display()
        ))
    })?;
    let mut texts = Vec::with_capacity(values.len());
    for (index, value) in values.iter().enumerate() {
        match value.as_str() {
            Some(s) => texts.push(s.to_string()),
            None => {
                return Err(Failure::usage(format!(
                    "bias file {}: entry {} must be a \"p/q\" string, got {value}",
                    path.display(),
                    index + 1
                )))
            }
        }
    }
    parse_pile_probs(&texts).map_err(|e| Failure::usage(format!("bias file {}: {e}", path.display())))
}

fn build_spec(n: u64, m: u32, bias: Option<&PathBuf>) -> CliResult<ShuffleSpec> {
    let n = usize::try_from(n).map_err(|_| Failure::usage(format!("n = {n} is too large")))?;
    match bias {
        None => ShuffleSpec::new(n, m).map_err(Failure::from),
        Some(path) => {
            let probs = read_bias(path)?;
            ShuffleSpec::biased(n, m, probs)
                .map_err(|e| Failure::usage(format!("bias file {}: {e}", path.display())))
        }
    }
}

fn budget(flag: Option<u64>) -> u64 {
    flag.unwrap_or_else(oracle::budget_from_env)
}

/// Parses "a-b" or "a,b,c" (or a single value).
fn parse_list(text: &str, what: &str) -> CliResult<Vec<u64>> {
    let bad = || Failure::usage(format!("invalid {what} list {text:?}; use \"a-b\" or \"a,b,c\""));
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once('-') {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|part| part.trim().parse().map_err(|_| bad()))
        .collect()
}

fn parse_sizes(text: &str) -> CliResult<Vec<usize>> {
    let values = parse_list(text, "n")?;
    if values.contains(&0) {
        return Err(Failure::usage("deck sizes must be at least 1"));
    }
    values
        .into_iter()
        .map(|v| usize::try_from(v).map_err(|_| Failure::usage(format!("n = {v} is too large"))))
        .collect()
}

#[derive(Serialize)]
struct SampleRecord {
    index: u64,
    word: Vec<u32>,
    permutation: Vec<u32>,
}

#[derive(Serialize)]
struct SampleOutput<'a> {
    schema_version: u32,
    spec: &'a ShuffleSpec,
    seed: u64,
    chunk_size: u64,
    samples: Vec<SampleRecord>,
}

fn cmd_sample(args: SampleArgs) -> CliResult<u8> {
    let spec = build_spec(args.deck.n, args.deck.m, args.deck.bias.as_ref())?;
    let records: Vec<SampleRecord> = montecarlo::sample_stream(&spec, args.seed, args.chunk_size)
        .take(args.samples as usize)
        .enumerate()
        .map(|(index, word)| SampleRecord {
            index: index as u64,
            permutation: word_to_permutation(&word).into(),
            word: word.into_letters(),
        })
        .collect();
    let text = match args.format {
        Format::Json => to_json(&SampleOutput {
            schema_version: SCHEMA_VERSION,
            spec: &spec,
            seed: args.seed,
            chunk_size: args.chunk_size,
            samples: records,
        }),
        Format::Csv => {
            let mut out = String::from("index,word,permutation\n");
            for r in &records {
                out.push_str(&format!(
                    "{},{},{}\n",
                    r.index,
                    render::join(&r.word, " "),
                    render::join(&r.permutation, " ")
                ));
            }
            out
        }
        Format::Text => records
            .iter()
            .map(|r| {
                format!(
                    "{} -> {}\n",
                    render::braces(&r.word),
                    render::braces(&r.permutation)
                )
            })
            .collect(),
    };
    emit(&args.output, &text)?;
    Ok(0)
}

fn experiment_config(spec: ShuffleSpec, run: &RunArgs) -> ExperimentConfig {
    ExperimentConfig::new(spec, run.statistic, run.samples, run.seed)
        .with_chunk_size(run.chunk_size)
        .with_threads(run.threads)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<u8> {
    let spec = build_spec(args.deck.n, args.deck.m, args.deck.bias.as_ref())?;
    let config = experiment_config(spec, &args.run);
    let (report, elapsed) = montecarlo::run_experiment_timed(&config)?;
    eprintln!("wall time: {:.3} s", elapsed.as_secs_f64());
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Csv => report.histogram_csv(),
        Format::Text => render::report_text(&report),
    };
    emit(&args.output, &text)?;
    Ok(0)
}

fn cmd_oracle(args: OracleArgs) -> CliResult<u8> {
    let spec = build_spec(args.deck.n, args.deck.m, args.deck.bias.as_ref())?;
    let dist = oracle::enumerate_distribution_with_threads(
        &spec,
        args.statistic,
        budget(args.budget),
        args.threads,
    )?;
    let json = dist.to_json();
    let text = match args.format {
        Format::Json => to_json(&json),
        Format::Csv => {
            let mut out = String::from("value,count\n");
            for (value, count) in &json.counts {
                out.push_str(&format!("{value},{count}\n"));
            }
            out
        }
        Format::Text => render::distribution_text(&json),
    };
    emit(&args.output, &text)?;
    Ok(0)
}

fn cmd_audit(args: AuditArgs) -> CliResult<u8> {
    let ns = parse_sizes(&args.n)?;
    let ms = parse_list(&args.m, "m")?
        .into_iter()
        .map(|m| match u32::try_from(m) {
            Ok(m) if m >= 1 => Ok(m),
            _ => Err(Failure::usage(format!("invalid shelf count {m}"))),
        })
        .collect::<CliResult<Vec<u32>>>()?;
    let grid: Vec<(usize, u32)> = ms
        .iter()
        .flat_map(|&m| ns.iter().map(move |&n| (n, m)))
        .collect();
    let report = oracle::audit_formulas(&grid, budget(args.budget), args.threads);
    for skipped in &report.skipped {
        eprintln!("skipped (n={}, m={}): {}", skipped.n, skipped.m, skipped.reason);
    }
    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Csv => render::audit_csv(&report),
        Format::Text => render::audit_table(&report),
    };
    emit(&args.output, &text)?;
    if args.strict && report.has_published_findings() {
        return Ok(4);
    }
    Ok(0)
}

#[derive(Serialize)]
struct CltOutput<'a> {
    schema_version: u32,
    reports: &'a [shelf_lab::ExperimentReport],
    summary: &'a [montecarlo::CltRow],
}

fn cmd_clt(args: CltArgs) -> CliResult<u8> {
    let ns = parse_sizes(&args.n)?;
    let spec = build_spec(ns[0] as u64, args.m, args.bias.as_ref())?;
    let base = experiment_config(spec, &args.run);
    let reports = montecarlo::clt_sweep(&base, &ns)?;
    let rows = montecarlo::clt_rows(&reports);
    let text = match args.format {
        Format::Json => to_json(&CltOutput {
            schema_version: SCHEMA_VERSION,
            reports: &reports,
            summary: &rows,
        }),
        Format::Csv => montecarlo::clt_csv(&rows),
        Format::Text => render::clt_table(&rows),
    };
    emit(&args.output, &text)?;
    Ok(0)
}

fn cmd_formulas(args: FormulaArgs) -> CliResult<u8> {
    if args.name == "list" {
        emit(&args.output, &formulas::catalogue())?;
        return Ok(0);
    }
    let spec = match (args.m, args.bias.as_ref()) {
        (Some(m), Some(path)) => Some(build_spec(args.n.unwrap_or(1), m, Some(path))?),
        _ => None,
    };
    let value = formulas::evaluate(&args.name, args.n, args.m, spec.as_ref())?;
    let text = match args.format {
        Format::Json => to_json(&value.to_json(&args.name, args.n, args.m)),
        Format::Csv | Format::Text => value.to_text(),
    };
    emit(&args.output, &text)?;
    Ok(0)
}
