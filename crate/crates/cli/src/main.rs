//! `tempock` command-line driver.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

use tempock::ast::Program;
use tempock::classgraph::{build_graph, ExploreError, Limits};
use tempock::library::{check_schedulable, parse_task_table, EtMode, LibraryError};
use tempock::oracle::{oracle_explore, OracleError};
use tempock::patterns::{check_property, CheckOptions, Verdict};
use tempock::random::{random_tts, RandomOptions};
use tempock::time::Rat;
use tempock::tts::CompileError;
use tempock::{compile, parse_program, ParseError, Tts};

mod report;

use report::Report;

const EXIT_HOLDS: u8 = 0;
const EXIT_VIOLATED: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_PARSE: u8 = 65;

#[derive(Parser, Debug)]
#[command(
    name = "tempock",
    version,
    about = "Model checker for timed specifications"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Only check the named property (repeatable).
    #[arg(long = "prop", global = true, value_name = "NAME")]
    props: Vec<String>,
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    max_classes: Option<u64>,
    #[arg(long, global = true, value_name = "SECONDS")]
    time_budget: Option<f64>,
    #[arg(long, global = true, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Oracle time step, as `P/Q` or an integer.
    #[arg(long, global = true, value_name = "P/Q", value_parser = parse_granularity)]
    granularity: Option<Rat>,
    /// Leave wall-clock times out of reports.
    #[arg(long, global = true)]
    no_times: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check declared properties.
    Check { file: PathBuf },
    /// Build the class graph and print statistics.
    Explore {
        file: PathBuf,
        /// Also print every class and edge.
        #[arg(long)]
        dump: bool,
    },
    /// Schedulability of a task table, deterministic and interval execution times.
    Sched { table: PathBuf },
    /// Compare the class graph with the discrete-time oracle. Without a
    /// file, a random system seeded from TEMPOCK_SEED is used.
    Oracle { file: Option<PathBuf> },
    /// Pretty-print a model.
    Fmt { file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_granularity(s: &str) -> Result<Rat, String> {
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: i64 = p.parse().map_err(|_| format!("bad numerator `{p}`"))?;
    let q: i64 = q.parse().map_err(|_| format!("bad denominator `{q}`"))?;
    if p <= 0 || q <= 0 {
        return Err("granularity must be positive".into());
    }
    Ok(Rat::new(p, q))
}

/// Failure carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::new(EXIT_PARSE, format!("parse error: {e}"))
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        Failure::new(EXIT_PARSE, format!("model error: {e}"))
    }
}

impl From<LibraryError> for Failure {
    fn from(e: LibraryError) -> Self {
        let code = match e {
            LibraryError::Pattern(_) => EXIT_ERROR,
            _ => EXIT_PARSE,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok((code, out)) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("tempock: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn limits(cli: &Cli) -> Result<Limits, Failure> {
    let mut l = Limits {
        threads: cli.threads as usize,
        ..Limits::default()
    };
    if let Some(n) = cli.max_classes {
        l.max_classes = n as usize;
    }
    if let Some(s) = cli.time_budget {
        if !(s.is_finite() && s > 0.0) {
            return Err(Failure::new(EXIT_USAGE, "--time-budget must be positive"));
        }
        l.time_budget = Some(Duration::from_secs_f64(s));
    }
    Ok(l)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(Program, Tts), Failure> {
    let text = read(path)?;
    let prog = parse_program(&text)?;
    let tts = compile(&prog)?;
    Ok((prog, tts))
}

fn run(cli: &Cli) -> Result<(u8, String), Failure> {
    let limits = limits(cli)?;
    if !cli.props.is_empty() && !matches!(cli.command, Command::Check { .. }) {
        return Err(Failure::new(EXIT_USAGE, "--prop only applies to check"));
    }
    match &cli.command {
        Command::Check { file } => cmd_check(cli, file, limits),
        Command::Explore { file, dump } => cmd_explore(cli, file, *dump, limits),
        Command::Sched { table } => cmd_sched(cli, table, limits),
        Command::Oracle { file } => cmd_oracle(cli, file.as_deref(), limits),
        Command::Fmt { file } => {
            let prog = parse_program(&read(file)?)?;
            Ok((EXIT_HOLDS, tempock::pretty::pretty_print(&prog)))
        }
    }
}

fn seconds(cli: &Cli, t: Instant) -> Option<f64> {
    (!cli.no_times).then(|| t.elapsed().as_secs_f64())
}

fn cmd_check(cli: &Cli, file: &Path, limits: Limits) -> Result<(u8, String), Failure> {
    let (prog, tts) = load(file)?;
    for name in &cli.props {
        if !prog.properties.iter().any(|p| &p.name == name) {
            return Err(Failure::new(
                EXIT_USAGE,
                format!("no property named `{name}`"),
            ));
        }
    }
    let opts = CheckOptions {
        limits,
        max_product: None,
    };
    let mut report = Report::new("check");
    for decl in &prog.properties {
        if !cli.props.is_empty() && !cli.props.contains(&decl.name) {
            continue;
        }
        let start = Instant::now();
        match check_property(&prog, &tts, decl, &opts) {
            Ok(out) => {
                let cex = out
                    .counterexample
                    .as_ref()
                    .map(|c| c.render(&out.graph, &out.product.tts));
                let note = match &out.verdict {
                    Verdict::Unknown(why) => Some(why.clone()),
                    _ => None,
                };
                report.row(
                    &decl.name,
                    out.verdict.as_str(),
                    Some(out.graph.len()),
                    seconds(cli, start),
                    note,
                    cex,
                );
            }
            Err(e) => report.row(
                &decl.name,
                "error",
                None,
                seconds(cli, start),
                Some(e.to_string()),
                None,
            ),
        }
    }
    Ok((
        report.exit_code(),
        report.render(cli.format == Format::Json),
    ))
}

fn cmd_explore(
    cli: &Cli,
    file: &Path,
    dump: bool,
    limits: Limits,
) -> Result<(u8, String), Failure> {
    let (_, tts) = load(file)?;
    let (g, limit) = match build_graph(&tts, &limits) {
        Ok(g) => (g, None),
        Err(ExploreError::LimitExceeded { limit, partial }) => (*partial, Some(limit.to_string())),
        Err(ExploreError::Fire(e)) => return Err(Failure::new(EXIT_ERROR, e.to_string())),
    };
    let code = if limit.is_some() {
        EXIT_ERROR
    } else {
        EXIT_HOLDS
    };
    let wall = (!cli.no_times).then_some(g.elapsed.as_secs_f64());
    if cli.format == Format::Json {
        let v = json!({
            "schema": 1,
            "command": "explore",
            "classes": g.len(),
            "edges": g.edge_count(),
            "dead": g.dead().count(),
            "memory_bytes": g.memory_estimate(),
            "seconds": wall,
            "limit": limit,
        });
        return Ok((
            code,
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap()),
        ));
    }
    let mut out = String::new();
    out.push_str(&format!(
        "classes   {}\nedges     {}\ndead      {}\nmemory    {} bytes\n",
        g.len(),
        g.edge_count(),
        g.dead().count(),
        g.memory_estimate()
    ));
    if let Some(w) = wall {
        out.push_str(&format!("wall      {w:.3}s\n"));
    }
    if let Some(l) = &limit {
        out.push_str(&format!("stopped   {l}\n"));
    }
    if dump {
        out.push_str(&g.dump(&tts));
    }
    Ok((code, out))
}

fn cmd_sched(cli: &Cli, table: &Path, limits: Limits) -> Result<(u8, String), Failure> {
    let tasks = parse_task_table(&read(table)?)?;
    let opts = CheckOptions {
        limits,
        max_product: None,
    };
    let mut report = Report::new("sched");
    for (label, mode) in [
        ("deterministic", EtMode::Deterministic),
        ("interval", EtMode::Interval),
    ] {
        let start = Instant::now();
        let r = check_schedulable(&tasks, mode, &opts)?;
        let verdict = match r.schedulable {
            Some(true) => "schedulable",
            Some(false) => "not schedulable",
            None => "unknown",
        };
        let cex = r
            .outcome
            .counterexample
            .as_ref()
            .map(|c| c.render(&r.outcome.graph, &r.outcome.product.tts));
        let note = match &r.outcome.verdict {
            Verdict::Unknown(why) => Some(why.clone()),
            _ => None,
        };
        report.row(
            label,
            verdict,
            Some(r.outcome.graph.len()),
            seconds(cli, start),
            note,
            cex,
        );
    }
    Ok((
        report.exit_code(),
        report.render(cli.format == Format::Json),
    ))
}

fn seed() -> Result<u64, Failure> {
    match std::env::var("TEMPOCK_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_USAGE, format!("TEMPOCK_SEED `{s}` is not an integer"))),
        Err(_) => Ok(42),
    }
}

fn cmd_oracle(cli: &Cli, file: Option<&Path>, limits: Limits) -> Result<(u8, String), Failure> {
    let (tts, source) = match file {
        Some(f) => (load(f)?.1, f.display().to_string()),
        None => {
            let s = seed()?;
            let mut rng = StdRng::seed_from_u64(s);
            (
                random_tts(&mut rng, &RandomOptions::default()),
                format!("random seed {s}"),
            )
        }
    };
    let g = cli.granularity.unwrap_or_else(|| Rat::new(1, 2));
    let graph = match build_graph(&tts, &limits) {
        Ok(g) => g,
        Err(e) => return Err(Failure::new(EXIT_ERROR, e.to_string())),
    };
    let gtext = tempock::time::fmt_rat(&g);
    let (code, status, detail) = match oracle_explore(&tts, g) {
        Ok(o) => {
            let graph_states: std::collections::BTreeSet<_> =
                graph.classes.iter().map(|c| c.state.clone()).collect();
            let mut firable = std::collections::BTreeMap::<_, std::collections::BTreeSet<_>>::new();
            for (i, c) in graph.classes.iter().enumerate() {
                firable
                    .entry(c.state.clone())
                    .or_default()
                    .extend(graph.succ[i].iter().map(|&(t, _)| t));
            }
            let graph_dead: std::collections::BTreeSet<_> =
                graph.dead().map(|i| graph.class(i).state.clone()).collect();
            let mut diffs = Vec::new();
            for s in graph_states.symmetric_difference(&o.states) {
                let side = if o.states.contains(s) {
                    "oracle only"
                } else {
                    "graph only"
                };
                diffs.push(format!("{side}: {}", tts.show_state(s)));
            }
            for (s, ts) in &o.firable {
                if firable.get(s).is_some_and(|g| g != ts) {
                    diffs.push(format!("firable sets differ at {}", tts.show_state(s)));
                }
            }
            if graph_dead != o.dead {
                diffs.push("dead states differ".to_string());
            }
            if diffs.is_empty() {
                (EXIT_HOLDS, "MATCH", format!("{} states", o.states.len()))
            } else {
                (EXIT_VIOLATED, "MISMATCH", diffs.join("; "))
            }
        }
        Err(e @ OracleError::GranularityTooCoarse { .. })
        | Err(e @ OracleError::HorizonExceeded(_)) => (EXIT_ERROR, "INCONCLUSIVE", e.to_string()),
        Err(e) => return Err(Failure::new(EXIT_ERROR, e.to_string())),
    };
    if cli.format == Format::Json {
        let v: Value = json!({
            "schema": 1,
            "command": "oracle",
            "source": source,
            "granularity": gtext,
            "classes": graph.len(),
            "result": status,
            "detail": detail,
        });
        return Ok((
            code,
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap()),
        ));
    }
    Ok((
        code,
        format!("{source} at granularity {gtext}: {status} ({detail})\n"),
    ))
}
