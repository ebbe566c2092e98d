mod render;
mod settings;

use bcs_core::detector::{rank_report, DetectionResult, ScoredGroup};
use bcs_core::indicators::{collusion_scores, Cohort, SuspiciousnessTable};
use bcs_core::ingest::{build_graph, parse_log, IngestOptions, LogFormat};
use bcs_core::mining::{enumerate_candidates, CandidateSet};
use bcs_core::query::{parse, QueryAnswer, QueryError, QuerySession};
use bcs_core::snapshot::{read_snapshot, write_snapshot};
use bcs_core::synth::{
    cumulative_rows, generate, threshold_sweep, AttackScript, GeneratorParams, LabeledDataset,
};
use bcs_core::{detect, Biclique, Detector, RatingGraph};
use clap::{Parser, Subcommand, ValueEnum};
use settings::{resolve, DetectArgs};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exit status plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn runtime(msg: impl ToString) -> Self {
        Self {
            code: 1,
            message: msg.to_string(),
        }
    }

    pub fn usage(msg: impl ToString) -> Self {
        Self {
            code: 2,
            message: msg.to_string(),
        }
    }

    pub fn config(msg: impl ToString) -> Self {
        Self {
            code: 3,
            message: msg.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        // a closed stdout (e.g. piped into head) is not worth reporting
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Self {
                code: 0,
                message: String::new(),
            };
        }
        Failure::runtime(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        match e.io_error_kind() {
            Some(kind) => io::Error::new(kind, e).into(),
            None => Failure::runtime(e),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Collusion group detection for rating logs.
#[derive(Debug, Parser)]
#[command(name = "bcs", version, about)]
struct Cli {
    /// JSON detection config, same schema as the config echo in a result
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true, env = "BCS_THREADS")]
    threads: Option<usize>,
    /// More log output on stderr (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Report {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a rating log and write a graph snapshot
    Ingest {
        /// Rating log to read
        #[arg(long)]
        input: PathBuf,
        /// Log format
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Drop reviewers with fewer distinct products
        #[arg(long, default_value_t = 10)]
        min_reviewer: usize,
        /// Drop products with fewer ratings
        #[arg(long, default_value_t = 10)]
        min_product: usize,
        /// Top of the rating scale
        #[arg(long, default_value_t = 5.0)]
        max_value: f64,
        /// Snapshot path [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail on the first malformed line instead of skipping it
        #[arg(long)]
        strict: bool,
    },
    /// Enumerate candidate groups (maximal bicliques)
    Mine {
        /// Graph snapshot written by ingest
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        detect: DetectArgs,
        /// JSON lines output [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score candidate groups with every indicator
    Indicators {
        /// Graph snapshot written by ingest
        #[arg(long)]
        graph: PathBuf,
        /// Candidate groups written by mine
        #[arg(long)]
        candidates: PathBuf,
        #[command(flatten)]
        detect: DetectArgs,
        /// JSON lines output [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cumulative distributions of GVS, GTS, GRS and GMS as CSV
    Stats {
        #[arg(long)]
        scored: PathBuf,
        /// Injected groups, to split the distributions by class
        #[arg(long)]
        truth: Option<PathBuf>,
        /// CSV output [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full detection pipeline
    Detect {
        /// Graph snapshot written by ingest
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        detect: DetectArgs,
        /// Full result as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        /// What to print on stdout
        #[arg(long, value_enum, default_value = "json")]
        report: Report,
    },
    /// Evaluate getbicliques queries
    Query {
        /// Graph snapshot written by ingest
        #[arg(long)]
        graph: PathBuf,
        /// Saved detection result to query instead of re-mining
        #[arg(long)]
        result: Option<PathBuf>,
        /// Query text
        #[arg(short = 'e', long = "execute", conflicts_with = "repl")]
        query: Option<String>,
        /// Interactive prompt
        #[arg(long)]
        repl: bool,
        /// JSON output instead of a table
        #[arg(long)]
        json: bool,
        /// Ignore --result and mine the graph again
        #[arg(long)]
        fresh: bool,
        /// Unknown ids in filters are errors rather than warnings
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        detect: DetectArgs,
    },
    /// Synthetic labelled data
    Synth {
        #[command(subcommand)]
        command: SynthCommand,
    },
}

#[derive(Debug, Subcommand)]
enum SynthCommand {
    /// Generate a rating log with injected attacks
    Generate {
        /// Honest reviewers
        #[arg(long, default_value_t = 200)]
        honest: usize,
        /// Products
        #[arg(long, default_value_t = 50)]
        products: usize,
        /// Chance that an honest reviewer rates a given product
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        /// Attack script, e.g. size=5,targets=4,mode=promote,span=2,dup=0.2,camo=0.3 (repeatable)
        #[arg(long)]
        attack: Vec<String>,
        /// Random seed
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// CSV rating log
        #[arg(long)]
        out: PathBuf,
        /// Injected groups as JSON
        #[arg(long)]
        truth: PathBuf,
    },
    /// Precision and recall over a threshold sweep
    Eval {
        /// CSV rating log from generate
        #[arg(long)]
        data: PathBuf,
        /// Injected groups from generate
        #[arg(long)]
        truth: PathBuf,
        /// start:end:step
        #[arg(long, default_value = "0.0:1.0:0.05")]
        deltas: String,
        /// Ingest pruning of reviewers
        #[arg(long, default_value_t = 1)]
        min_reviewer: usize,
        /// Ingest pruning of products
        #[arg(long, default_value_t = 1)]
        min_product: usize,
        #[command(flatten)]
        detect: DetectArgs,
        /// CSV output [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::runtime(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::runtime(format!("cannot open {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<RatingGraph, Failure> {
    read_snapshot(open(path)?).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Failure::runtime(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

fn write_json<T: serde::Serialize>(mut w: impl Write, value: &T) -> Outcome {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_lines<'a, T: serde::Serialize + 'a>(
    mut w: impl Write,
    items: impl IntoIterator<Item = &'a T>,
) -> Outcome {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_deltas(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || {
        Failure::usage(format!(
            "--deltas expects start:end:step or a comma list, got {text:?}"
        ))
    };
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let (start, end, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || end < start {
            return Err(bad());
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        // integer steps avoid accumulating rounding error; round to 1e-12
        Ok((0..=n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::runtime(format!("thread pool: {e}")))?;
    }
    let config = cli.config.as_ref();
    match cli.command {
        Command::Ingest {
            input,
            format,
            min_reviewer,
            min_product,
            max_value,
            out,
            strict,
        } => {
            let format = match format {
                Format::Csv => LogFormat::Csv,
                Format::Jsonl => LogFormat::JsonLines,
            };
            let log =
                parse_log(open(&input)?, format, max_value, strict).map_err(Failure::runtime)?;
            for e in &log.errors {
                log::warn!("{}: skipped {e}", input.display());
            }
            let graph = build_graph(
                &log.ratings,
                &IngestOptions {
                    reviewer_min: min_reviewer,
                    product_min: min_product,
                    max_value,
                },
            )
            .map_err(Failure::config)?;
            log::info!(
                "{} ratings -> {} reviewers, {} products, {} edges",
                log.ratings.len(),
                graph.reviewers().len(),
                graph.products().len(),
                graph.edges().len()
            );
            let mut w = output(out.as_deref())?;
            write_snapshot(&graph, &mut w).map_err(Failure::runtime)?;
            w.flush()?;
        }
        Command::Mine { graph, detect, out } => {
            let cfg = resolve(config, &detect)?;
            let g = load_graph(&graph)?;
            let set = enumerate_candidates(&g, cfg.min_r, cfg.min_p, cfg.candidate_cap)
                .map_err(Failure::runtime)?;
            log::info!("{} candidate groups", set.len());
            write_lines(output(out.as_deref())?, set.iter())?;
        }
        Command::Indicators {
            graph,
            candidates,
            detect,
            out,
        } => {
            let cfg = resolve(config, &detect)?;
            let g = load_graph(&graph)?;
            let set = CandidateSet::new(read_lines::<Biclique>(&candidates)?);
            let table = SuspiciousnessTable::build(&g);
            let cohort = Cohort::from(&set);
            let scored: Vec<ScoredGroup> = set
                .iter()
                .map(|b| {
                    let s = collusion_scores(b, &table, cfg.max_tw);
                    ScoredGroup {
                        biclique: b.clone(),
                        report: bcs_core::detector::report_for(b, &s, &cohort, &cfg.weights),
                    }
                })
                .collect();
            write_lines(output(out.as_deref())?, scored.iter())?;
        }
        Command::Stats { scored, truth, out } => {
            let groups: Vec<ScoredGroup> = read_lines(&scored)?;
            let truth = truth
                .map(|t| LabeledDataset::read_truth(open(&t)?).map_err(Failure::runtime))
                .transpose()?;
            let rows = cumulative_rows(&groups, truth.as_deref());
            let mut w = output(out.as_deref())?;
            writeln!(w, "indicator,class,percent,value")?;
            for r in rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    r.indicator,
                    r.class.as_str(),
                    r.percent,
                    r.value
                )?;
            }
            w.flush()?;
        }
        Command::Detect {
            graph,
            detect: args,
            out,
            report,
        } => {
            let cfg = resolve(config, &args)?;
            let g = load_graph(&graph)?;
            let result = detect(&g, &cfg).map_err(Failure::runtime)?;
            log::info!(
                "{} collusive of {} examined, {} expanded",
                result.collusive.len(),
                result.examined_count,
                result.expanded_count
            );
            if let Some(path) = &out {
                write_json(output(Some(path))?, &result)?;
            }
            let mut w = output(None)?;
            match report {
                Report::Json => return write_json(w, &result),
                Report::Table => write!(w, "{}", render::rank_table(&rank_report(&result)))?,
                Report::Csv => write!(w, "{}", render::rank_csv(&rank_report(&result)))?,
            }
            w.flush()?;
        }
        Command::Query {
            graph,
            result,
            query,
            repl,
            json,
            fresh,
            strict,
            detect,
        } => {
            let g = load_graph(&graph)?;
            let cache: Option<DetectionResult> = match (&result, fresh) {
                (Some(p), false) => Some(
                    serde_json::from_reader(open(p)?)
                        .map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))?,
                ),
                _ => None,
            };
            // a cached run supplies the defaults unless flags or --config say otherwise
            let base = match (&cache, config) {
                (Some(c), None) => c.config.clone(),
                _ => settings::load_config(config.map(|p| p.as_path()))?,
            };
            let cfg = detect.apply(base)?;
            let mut session = match &cache {
                Some(c) if Detector::compatible(&cfg, &c.config) => {
                    QuerySession::cached(&g, &cfg, c, strict)
                }
                Some(_) => {
                    log::warn!("cached result used other mining parameters; mining afresh");
                    QuerySession::fresh(&g, &cfg, strict)
                }
                None => QuerySession::fresh(&g, &cfg, strict),
            }
            .map_err(query_failure)?;
            if repl {
                return run_repl(&mut session, json);
            }
            let text = match query {
                Some(q) => q,
                None => {
                    let mut s = String::new();
                    io::Read::read_to_string(&mut io::stdin(), &mut s)?;
                    s
                }
            };
            let answer = parse(&text)
                .and_then(|ast| session.evaluate(&ast))
                .map_err(query_failure)?;
            print_answer(&answer, json)?;
        }
        Command::Synth { command } => match command {
            SynthCommand::Generate {
                honest,
                products,
                density,
                attack,
                seed,
                out,
                truth,
            } => {
                let attacks: Vec<AttackScript> = attack
                    .iter()
                    .map(|a| a.parse().map_err(Failure::config))
                    .collect::<Result<_, _>>()?;
                let data = generate(
                    &GeneratorParams::new(honest, products, density, seed),
                    &attacks,
                )
                .map_err(Failure::config)?;
                data.write_csv(output(Some(&out))?)
                    .map_err(Failure::runtime)?;
                data.write_truth(output(Some(&truth))?)
                    .map_err(Failure::runtime)?;
                log::info!(
                    "{} ratings, {} injected groups",
                    data.raw.len(),
                    data.truth.len()
                );
            }
            SynthCommand::Eval {
                data,
                truth,
                deltas,
                min_reviewer,
                min_product,
                detect,
                out,
            } => {
                let mut cfg = resolve(config, &detect)?;
                cfg.prune_reviewer_min = min_reviewer;
                cfg.prune_product_min = min_product;
                let deltas = parse_deltas(&deltas)?;
                let raw = parse_log(open(&data)?, LogFormat::Csv, cfg.max_value, true)
                    .map_err(Failure::runtime)?
                    .ratings;
                let truth = LabeledDataset::read_truth(open(&truth)?).map_err(Failure::runtime)?;
                let points = threshold_sweep(&LabeledDataset { raw, truth }, &cfg, &deltas)
                    .map_err(Failure::config)?;
                let mut w = output(out.as_deref())?;
                writeln!(
                    w,
                    "delta,retrieved,precision,recall,precision_vacuous,recall_vacuous"
                )?;
                for p in points {
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        p.delta,
                        p.retrieved,
                        p.precision.value,
                        p.recall.value,
                        p.precision.vacuous,
                        p.recall.vacuous
                    )?;
                }
                w.flush()?;
            }
        },
    }
    Ok(())
}

fn query_failure(e: QueryError) -> Failure {
    match e {
        QueryError::Syntax { .. } => Failure::usage(e),
        QueryError::Semantic { .. } | QueryError::UnknownId { .. } => Failure::config(e),
        QueryError::Detect(bcs_core::detector::DetectError::Config(_)) => Failure::config(e),
        QueryError::Detect(_) => Failure::runtime(e),
    }
}

fn print_answer(answer: &QueryAnswer, json: bool) -> Outcome {
    for w in &answer.warnings {
        log::warn!("{w}");
    }
    let mut out = output(None)?;
    if json {
        return write_json(out, answer);
    }
    write!(out, "{}", render::query_output(&answer.output))?;
    out.flush()?;
    Ok(())
}

fn run_repl(session: &mut QuerySession<'_>, json: bool) -> Outcome {
    let mut editor = rustyline::DefaultEditor::new().map_err(Failure::runtime)?;
    let mut pending = String::new();
    loop {
        let prompt = if pending.is_empty() { "bcs> " } else { "...> " };
        let line = match editor.readline(prompt) {
            Ok(line) => line,
            Err(rustyline::error::ReadlineError::Interrupted) => {
                pending.clear();
                continue;
            }
            Err(rustyline::error::ReadlineError::Eof) => break,
            Err(e) => return Err(Failure::runtime(e)),
        };
        let trimmed = line.trim();
        if pending.is_empty() && matches!(trimmed, "quit" | "exit" | "\\q") {
            break;
        }
        if trimmed.is_empty() {
            continue;
        }
        pending.push_str(&line);
        pending.push('\n');
        // a statement ends with ';' once any filter block is closed
        let opens = pending.matches('{').count();
        let closes = pending.matches('}').count();
        if !trimmed.ends_with(';') || opens > closes {
            continue;
        }
        let text = std::mem::take(&mut pending);
        let _ = editor.add_history_entry(text.trim());
        match parse(&text).and_then(|ast| session.evaluate(&ast)) {
            Ok(answer) => print_answer(&answer, json)?,
            Err(e) => eprintln!("error: {e}"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
