//! `moebius`: batch front end. Every subcommand writes one JSON report and
//! exits 0 on a clean pass, 1 when violations are found, 2 on input errors.

mod commands;
mod input;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "moebius", version, about = "Generalized Möbius structures on finite and procedural spaces")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Space (JSON or CSV) or cross-ratio table (JSON).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Comparison tolerance for float mode.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Sample size for scans too large to run exhaustively.
    #[arg(long, global = true, default_value_t = 20_000)]
    pub budget: usize,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub tau: f64,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Check the semi-metric presentation.
    Validate,
    /// Evaluate the cross ratio of a quadruple.
    Crt {
        /// Four comma-separated point labels.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        quad: Vec<String>,
    },
    /// Check the four structure axioms.
    Axioms,
    /// Derive the semi-metric d_A for a base triple (ω, α, β).
    DeriveDa {
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        base: Vec<String>,
    },
    /// Verify the five properties of d_A for a base triple.
    VerifyDa {
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        base: Vec<String>,
    },
    /// Involute the input space at a point.
    Involute {
        #[arg(long)]
        point: String,
    },
    /// Least quasi constant of the input space.
    QuasiK,
    /// Corner margin over non-degenerate quadruples.
    Corner,
    /// Symmetry margin over non-degenerate quadruples (empirical).
    Symmetry,
    /// Bounded quasi-metric with the same cross ratios.
    Boundedify {
        #[arg(long)]
        zeta0: String,
    },
    /// Classify a sequence.
    Cauchy(SeqArgs),
    /// Compare two Cauchy sequences.
    Equivalent(SeqArgs),
    /// Adjoin the limits of Cauchy sequences.
    Adjoin(SeqArgs),
    /// Emit a named fixture space.
    Fixture {
        #[arg(value_enum)]
        name: FixtureName,
        #[arg(long, default_value_t = 8)]
        size: usize,
        /// Quasi constant for random-quasimetric.
        #[arg(long, default_value_t = 2)]
        k: u32,
        /// Half-width of the doubled-zero line sample.
        #[arg(long, default_value = "3")]
        extent: String,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SeqArgs {
    /// Sequence specs: reciprocal, alternating-reciprocal, linear:SLOPE,OFFSET,
    /// constant:C or table:L1;L2;... (labels of the input space). Prefix with
    /// NAME= to set the label.
    #[arg(long = "sequence", required = true)]
    pub sequences: Vec<String>,
    /// Ambient space for scalar sequences; the input points, parsed as
    /// numbers, are the sample.
    #[arg(long, value_enum)]
    pub ambient: Option<Ambient>,
    /// Extra candidate points for good pairs.
    #[arg(long, value_delimiter = ',')]
    pub anchors: Vec<String>,
    /// Attach closed-form limits instead of estimating them from the tail.
    #[arg(long)]
    pub closed_form: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ambient {
    Line,
    ExtendedLine,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureName {
    Circle,
    DoubledZero,
    PuncturedInterval,
    IntegerLine,
    ExtendedLine,
    RandomMetric,
    RandomQuasimetric,
    RandomWithInfinity,
    BinaryUltrametric,
}

/// Result of a command: the payload and whether it is a clean pass.
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
}

/// Input problems: unreadable files, unknown labels, malformed specs.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::Crt { .. } => "crt",
        Command::Axioms => "axioms",
        Command::DeriveDa { .. } => "derive-da",
        Command::VerifyDa { .. } => "verify-da",
        Command::Involute { .. } => "involute",
        Command::QuasiK => "quasi-k",
        Command::Corner => "corner",
        Command::Symmetry => "symmetry",
        Command::Boundedify { .. } => "boundedify",
        Command::Cauchy(_) => "cauchy",
        Command::Equivalent(_) => "equivalent",
        Command::Adjoin(_) => "adjoin",
        Command::Fixture { .. } => "fixture",
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.global.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("moebius: cannot configure {w} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let config = json!({
        "input": cli.global.input,
        "mode": cli.global.mode,
        "tol": cli.global.tol,
        "seed": cli.global.seed,
        "budget": cli.global.budget,
        "horizon": cli.global.horizon,
        "delta": cli.global.delta,
        "tau": cli.global.tau,
        "workers": cli.global.workers.unwrap_or_else(rayon::current_num_threads),
    });
    let name = command_name(&cli.command);
    let (doc, code) = match commands::run(&cli) {
        Ok(out) => (
            json!({
                "schema_version": SCHEMA_VERSION,
                "command": name,
                "config": config,
                "status": if out.passed { "pass" } else { "fail" },
                "result": out.result,
            }),
            if out.passed { 0 } else { 1 },
        ),
        Err(InputError(msg)) => {
            eprintln!("moebius {name}: {msg}");
            (
                json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": name,
                    "config": config,
                    "status": "error",
                    "error": msg,
                }),
                2,
            )
        }
    };
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
    match &cli.global.out {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                eprintln!("moebius {name}: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => {
            // A closed pipe downstream is not an error of ours.
            let mut out = std::io::stdout().lock();
            if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("moebius {name}: cannot write report: {e}");
                    return ExitCode::from(2);
                }
            }
        }
    }
    ExitCode::from(code)
}
