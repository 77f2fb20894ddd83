//! `tig` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or configuration error,
//! 3 cycle limit reached.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::harness::{self, HarnessError, Topology};
use crate::interconnect::trace::trace_csv;
use crate::metrics::{emit_csv, MetricsRecord};
use crate::pattern::{self, binary_image, emit_apb_sequence_words, hex_listing, CtrlFlags};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CYCLE_LIMIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tig", version, about = "Bus traffic injector simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Little-endian descriptor image
    Bin,
    /// One descriptor per line, two hex words
    Hex,
    /// Configuration-port write sequence as CSV
    Apb,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a pattern file into a descriptor image
    Compile {
        pattern: PathBuf,
        #[arg(long, value_enum, default_value = "hex")]
        format: Format,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a topology and write the metrics CSV
    Run {
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_cycles: Option<u64>,
        /// Also run a baseline with injectors disabled and report slowdown
        #[arg(long)]
        pair: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the bus event trace to this file
        #[arg(long, conflicts_with = "pair")]
        trace: Option<PathBuf>,
    },
    /// Run a topology and write its bus event trace
    Trace {
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_cycles: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

fn write_artifact(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::input(format!("stdout: {e}")))
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_topology(
    path: &Path,
    seed: Option<u64>,
    max_cycles: Option<u64>,
) -> Result<Topology, Failure> {
    let mut t = Topology::load(path).map_err(|e| match e {
        HarnessError::Io { .. } => Failure::input(e.to_string()),
        _ => Failure::input(format!("{}: {e}", path.display())),
    })?;
    if let Some(seed) = seed {
        t.seed = seed;
    }
    if let Some(max) = max_cycles {
        t.max_cycles = max;
    }
    t.validate()
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(t)
}

fn cmd_compile(pattern_path: &Path, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let text = read_text(pattern_path)?;
    let words = pattern::compile(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", pattern_path.display())))?;
    let bytes = match format {
        Format::Bin => binary_image(&words),
        Format::Hex => hex_listing(&words).into_bytes(),
        Format::Apb => emit_apb_sequence_words(&words, CtrlFlags::default())
            .map_err(|e| Failure::input(format!("{}: {e}", pattern_path.display())))?
            .to_csv()
            .into_bytes(),
    };
    write_artifact(out, &bytes)?;
    eprintln!("{} descriptors", words.len());
    Ok(())
}

/// Splits a run result into the records to report and whether the cycle
/// limit was hit.
fn settle<T>(
    result: Result<T, HarnessError>,
    records: impl FnOnce(T) -> Vec<MetricsRecord>,
) -> Result<(Vec<MetricsRecord>, bool), Failure> {
    match result {
        Ok(v) => Ok((records(v), false)),
        Err(HarnessError::CycleLimitExceeded { partial, .. }) => Ok((partial, true)),
        Err(e) => Err(Failure::input(e.to_string())),
    }
}

fn limit_failure(max_cycles: u64) -> Failure {
    Failure {
        code: EXIT_CYCLE_LIMIT,
        message: format!("cycle limit of {max_cycles} reached; partial results written"),
    }
}

fn cmd_run(
    config: &Path,
    out: Option<&Path>,
    max_cycles: Option<u64>,
    pair: bool,
    seed: Option<u64>,
    trace: Option<&Path>,
) -> Result<(), Failure> {
    let t = load_topology(config, seed, max_cycles)?;
    let (records, hit_limit) = if pair {
        settle(harness::run_pair(&t), |r| vec![r.baseline, r.contended])?
    } else {
        let mut sim = harness::build(&t).map_err(|e| Failure::input(e.to_string()))?;
        sim.set_tracing(trace.is_some());
        let outcome = settle(sim.run(t.max_cycles), |m| vec![m])?;
        if let Some(path) = trace {
            write_artifact(Some(path), trace_csv(&sim.take_bus_trace()).as_bytes())?;
        }
        outcome
    };
    write_artifact(out, &emit_csv(&records))?;
    if hit_limit {
        return Err(limit_failure(t.max_cycles));
    }
    Ok(())
}

fn cmd_trace(
    config: &Path,
    out: Option<&Path>,
    max_cycles: Option<u64>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let t = load_topology(config, seed, max_cycles)?;
    let mut sim = harness::build(&t).map_err(|e| Failure::input(e.to_string()))?;
    sim.set_tracing(true);
    let (_, hit_limit) = settle(sim.run(t.max_cycles), |m| vec![m])?;
    write_artifact(out, trace_csv(&sim.take_bus_trace()).as_bytes())?;
    if hit_limit {
        return Err(limit_failure(t.max_cycles));
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Compile {
            pattern,
            format,
            out,
        } => cmd_compile(pattern, *format, out.as_deref()),
        Command::Run {
            config,
            out,
            max_cycles,
            pair,
            seed,
            trace,
        } => cmd_run(
            config,
            out.as_deref(),
            *max_cycles,
            *pair,
            *seed,
            trace.as_deref(),
        ),
        Command::Trace {
            config,
            out,
            max_cycles,
            seed,
        } => cmd_trace(config, out.as_deref(), *max_cycles, *seed),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("tig: {}", f.message);
            f.code
        }
    }
}

pub fn main_entry() -> i32 {
    run_with_args(std::env::args_os())
}
