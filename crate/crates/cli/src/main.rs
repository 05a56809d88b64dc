//! `cncc`: parse, check, run and explore CHAM programs, and drive the
//! synthetic cross-modal pipeline.
//!
//! Exit codes: 0 ok, 1 parse error, 2 I/O or usage error, 3 closure
//! violation, 4 run truncated, 5 exploration bound exceeded, 6 stage failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cncc_core::stages::export_dataset;
use cncc_core::{
    check_confluence, check_termination, dataflow_closure_check, explore, gen_synthetic_dataset,
    parse_program, render_program, run, run_pipeline, ChamProgram, PipelineConfig, RunConfig,
    SchedulerPolicy, StateGraph,
};
use serde_json::json;

const EXIT_PARSE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_CLOSURE: u8 = 3;
const EXIT_TRUNCATED: u8 = 4;
const EXIT_BOUND: u8 = 5;
const EXIT_STAGE: u8 = 6;

#[derive(Parser)]
#[command(name = "cncc", version, about = "Chemical abstract machine for cross-modal cognitive pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical rendering of a program.
    Parse(Io),
    /// Report inputs no rule or external provides; exit 3 if any.
    Check(Io),
    /// Run a program to a terminal solution and write the trace as JSON.
    Run {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sched: Sched,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        max_steps: u64,
    },
    /// Explore every firing order; DOT graph to --output, verdicts to stdout.
    Explore {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        bound: u64,
    },
    /// Generate a synthetic dataset, run learning and recognition, write metrics.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct Io {
    /// Program file (`.cham`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Sched {
    /// lex, fifo or random.
    #[arg(long, default_value = "lex")]
    scheduler: SchedulerPolicy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    sched: Sched,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..))]
    classes: u64,
    /// Standard deviation of the Gaussian noise.
    #[arg(long, default_value_t = 0.1, value_parser = non_negative)]
    noise: f64,
    /// Hold the incremental feedback at zero.
    #[arg(long)]
    force_zero_ei: bool,
    /// Also export the generated dataset into this directory.
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        Ok(_) => Err("must be a finite non-negative number".into()),
        Err(e) => Err(e.to_string()),
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read_program(input: &Option<PathBuf>) -> Result<ChamProgram, Failure> {
    let path = input.as_ref().ok_or_else(|| fail(EXIT_IO, "--input is required"))?;
    let text = fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
    parse_program(&text).map_err(|e| fail(EXIT_PARSE, format!("{}:{e}", path.display())))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => write_file(path, text),
        None => stdout(text),
    }
}

/// A closed pipe on the reading side is not an error.
fn stdout(text: &str) -> Result<(), Failure> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(fail(EXIT_IO, format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn cmd_parse(io: &Io) -> Result<u8, Failure> {
    let p = read_program(&io.input)?;
    emit(&io.output, &render_program(&p))?;
    Ok(0)
}

fn cmd_check(io: &Io) -> Result<u8, Failure> {
    let p = read_program(&io.input)?;
    let report = dataflow_closure_check(&p);
    emit(&io.output, &with_newline(report.to_json()))?;
    Ok(if report.is_closed() { 0 } else { EXIT_CLOSURE })
}

fn cmd_run(io: &Io, sched: &Sched, max_steps: u64) -> Result<u8, Failure> {
    let p = read_program(&io.input)?;
    let cfg = RunConfig {
        scheduler: sched.scheduler,
        seed: sched.seed,
        max_steps: max_steps as usize,
        ..RunConfig::default()
    };
    let mut trace = run(&p, &p.solution, &cfg);
    if let Some(path) = &io.input {
        trace.program = path.display().to_string();
    }
    emit(&io.output, &with_newline(trace.to_json()))?;
    Ok(if trace.truncated { EXIT_TRUNCATED } else { 0 })
}

fn verdicts(g: &StateGraph, bound: u64) -> serde_json::Value {
    json!({
        "bound": bound,
        "complete": g.complete,
        "states": g.states.len(),
        "edges": g.edges.len(),
        "terminals": g.terminals.iter().map(|t| g.state_key(*t)).collect::<Vec<_>>(),
        "longestPath": g.longest_path(),
        "confluence": check_confluence(g),
        "termination": check_termination(g),
    })
}

fn cmd_explore(io: &Io, bound: u64) -> Result<u8, Failure> {
    let p = read_program(&io.input)?;
    let (graph, code) = match explore(&p, &p.solution, bound as usize) {
        Ok(g) => (g, 0),
        Err(e) => (e.partial, EXIT_BOUND),
    };
    if let Some(path) = &io.output {
        write_file(path, &graph.to_dot())?;
    }
    let doc = serde_json::to_string_pretty(&verdicts(&graph, bound)).expect("verdicts serialize");
    stdout(&with_newline(doc))?;
    if code == EXIT_BOUND {
        eprintln!("error: exploration stopped after {bound} states");
    }
    Ok(code)
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<u8, Failure> {
    let cfg = PipelineConfig {
        classes: args.classes as usize,
        samples: args.samples as usize,
        noise: args.noise,
        iterations: args.iterations as usize,
        force_zero_ei: args.force_zero_ei,
        scheduler: args.sched.scheduler,
        ..PipelineConfig::default()
    };
    let seed = args.sched.seed;
    let data = gen_synthetic_dataset::<f64>(seed, cfg.samples, cfg.classes, cfg.noise)
        .map_err(|e| fail(EXIT_STAGE, e.to_string()))?;
    if let Some(dir) = &args.dataset_dir {
        export_dataset(dir, &data).map_err(|e| fail(EXIT_IO, e.to_string()))?;
    }
    let metrics = run_pipeline(&data, &cfg, seed).map_err(|e| fail(EXIT_STAGE, e.to_string()))?;
    emit(&args.output, &with_newline(metrics.to_json()))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Parse(io) => cmd_parse(io),
        Command::Check(io) => cmd_check(io),
        Command::Run { io, sched, max_steps } => cmd_run(io, sched, *max_steps),
        Command::Explore { io, bound } => cmd_explore(io, *bound),
        Command::Pipeline(args) => cmd_pipeline(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
