use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dtdb::encoding::{make_backend, BackendConfig, BackendKind, SequenceCodec, StateCodec};
use dtdb::flat_table::DEFAULT_SEED;
use dtdb::metrics::{RepSizes, RunRecord};
use dtdb::ordering::{build_ordering, objective, OrderingKind};
use dtdb::search::{ucs, SearchLimits, SearchStatus};
use dtdb::task::{generate, generate_task, parse_task, GeneratorSpec, GroundedTask};
use dtdb::treedb::TreeConfig;

const EXIT_INPUT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "dtdb", version, about = "State-set compression benchmarks over blind search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated task as GTF.
    Gen {
        /// chain:L, counter:B, gripper:N or numeric-counter:B
        spec: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run uniform-cost search and report one record.
    Solve(RunArgs),
    /// Run the backend and a baseline on the same task and report both.
    Compare(RunArgs),
    /// Describe a task's encodings without searching.
    Stats {
        #[command(flatten)]
        source: TaskSource,
        #[arg(long, default_value_t = 32)]
        word_bits: u32,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TaskSource {
    /// GTF task file.
    #[arg(long)]
    task: Option<PathBuf>,
    /// Inline generator spec, e.g. counter:10.
    #[arg(long = "gen")]
    generator: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: TaskSource,
    #[arg(long, default_value = "dtdb-s")]
    backend: String,
    #[arg(long, default_value = "input")]
    ordering: String,
    /// Tree sequences from packed FDR words or from true atom indices.
    #[arg(long, default_value = "fdr")]
    codec: String,
    #[arg(long, default_value_t = 32)]
    word_bits: u32,
    #[arg(long, default_value_t = 2)]
    resize_factor: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    max_expansions: Option<u64>,
    #[arg(long)]
    max_bytes: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Backend the compression ratio is measured against.
    #[arg(long)]
    baseline: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<dtdb::Error> for Failure {
    fn from(e: dtdb::Error) -> Self {
        use dtdb::Error as E;
        let code = match e {
            E::Parse(_) | E::Validation(_) | E::InvalidNumeric(_) | E::ElementTooWide { .. } => EXIT_INPUT,
            _ => EXIT_INTERNAL,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    // Exit code 2 is taken by LIMIT, so usage errors use the input code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("dtdb: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Gen { spec, output } => {
            let text = generate(spec.parse::<GeneratorSpec>()?);
            match output {
                Some(path) => fs::write(path, text)?,
                None => io::stdout().write_all(text.as_bytes())?,
            }
            Ok(0)
        }
        Command::Solve(args) => {
            let (id, task) = load(&args.source)?;
            let kind: BackendKind = args.backend.parse()?;
            let mut record = run_one(&id, &task, kind, &args)?;
            if let Some(b) = &args.baseline {
                let base = run_one(&id, &task, b.parse()?, &args)?;
                check_same(&base, &record)?;
                record.against(&base);
            }
            emit(&[record.clone()], args.format)?;
            Ok(status_code(record.status))
        }
        Command::Compare(args) => {
            let Some(b) = &args.baseline else {
                return Err(Failure { code: EXIT_INPUT, message: "compare needs --baseline".into() });
            };
            let (id, task) = load(&args.source)?;
            let base = run_one(&id, &task, b.parse()?, &args)?;
            let mut record = run_one(&id, &task, args.backend.parse()?, &args)?;
            check_same(&base, &record)?;
            record.against(&base);
            let status = record.status;
            emit(&[base, record], args.format)?;
            Ok(status_code(status))
        }
        Command::Stats { source, word_bits, format } => {
            let (id, task) = load(&source)?;
            let stats = task_stats(&id, &task, word_bits)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string(&stats).expect("serializable")),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(io::stdout());
                    w.serialize(&stats)?;
                    w.flush()?;
                }
            }
            Ok(0)
        }
    }
}

fn status_code(s: SearchStatus) -> u8 {
    match s {
        SearchStatus::Solved => 0,
        SearchStatus::Exhausted => 1,
        SearchStatus::Limit => 2,
    }
}

fn load(source: &TaskSource) -> Result<(String, GroundedTask), Failure> {
    if let Some(spec) = &source.generator {
        let spec: GeneratorSpec = spec.parse()?;
        return Ok((spec.to_string(), generate_task(spec)));
    }
    let path = source.task.as_ref().expect("clap requires a task source");
    let text = fs::read_to_string(path)
        .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) })?;
    let task = parse_task(&text).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message),
    })?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((id, task))
}

fn run_one(id: &str, task: &GroundedTask, kind: BackendKind, args: &RunArgs) -> Result<RunRecord, Failure> {
    let ordering: OrderingKind = args.ordering.parse()?;
    let sequence: SequenceCodec = args.codec.parse()?;
    let tree = TreeConfig::new(args.word_bits, args.resize_factor, args.seed)?;
    let order = build_ordering(task, ordering, args.word_bits)?;
    let codec = Arc::new(StateCodec::new(task, order.layout(&task.fdr(), args.word_bits)?)?);
    let mut states = make_backend(kind, codec, BackendConfig { tree, sequence })?;
    let limits = SearchLimits { max_expansions: args.max_expansions, max_bytes: args.max_bytes };
    let start = Instant::now();
    let result = ucs(task, states.as_mut(), limits)?;
    let wall = start.elapsed().as_secs_f64();
    let sizes = RepSizes {
        rep_bytes: states.rep_bytes(),
        peak_rep_bytes: states.peak_rep_bytes(),
        node_count: states.node_count(),
    };
    Ok(RunRecord::new(id, kind.name(), ordering.to_string(), args.seed, wall, &result, sizes))
}

fn check_same(a: &RunRecord, b: &RunRecord) -> Result<(), Failure> {
    if a.same_search(b) {
        return Ok(());
    }
    Err(Failure {
        code: EXIT_INTERNAL,
        message: format!(
            "search counters differ between {} and {}: expanded {}/{}, generated {}/{}, unique {}/{}",
            a.backend,
            b.backend,
            a.expanded,
            b.expanded,
            a.generated,
            b.generated,
            a.unique_states,
            b.unique_states
        ),
    })
}

fn emit(records: &[RunRecord], format: Format) -> Result<(), Failure> {
    let out = io::stdout();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out.lock());
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out.lock();
            for r in records {
                writeln!(out, "{}", serde_json::to_string(r).expect("serializable"))?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TaskStats {
    task: String,
    atoms: usize,
    mutex_groups: usize,
    fdr_vars: usize,
    numeric_vars: usize,
    actions: usize,
    fdr_value_bits: u64,
    input_words: usize,
    affinity_words: usize,
    input_objective: u64,
    affinity_objective: u64,
}

fn task_stats(id: &str, task: &GroundedTask, word_bits: u32) -> Result<TaskStats, Failure> {
    let fdr = task.fdr();
    let input = build_ordering(task, OrderingKind::Input, word_bits)?;
    let affinity = build_ordering(task, OrderingKind::Affinity, word_bits)?;
    Ok(TaskStats {
        task: id.to_string(),
        atoms: task.atoms.len(),
        mutex_groups: task.mutex_groups.len(),
        fdr_vars: fdr.var_count(),
        numeric_vars: task.numeric_vars.len(),
        actions: task.actions.len(),
        fdr_value_bits: input.layout(&fdr, word_bits)?.value_bits(),
        input_words: input.bins.len(),
        affinity_words: affinity.bins.len(),
        input_objective: objective(&input.positions(), task, &fdr),
        affinity_objective: objective(&affinity.positions(), task, &fdr),
    })
}
