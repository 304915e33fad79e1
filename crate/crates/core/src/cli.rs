//! The `measurekit` command line.
//!
//! Exit codes: 0 on success, 1 for usage, parse and construction errors, 2
//! for measure-theoretic failures (unrelated primitive measures, undefined
//! densities).

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::density::{logdensity2, logdensity3};
use crate::doc::{self, DocError};
use crate::error::MeasureError;
use crate::logweight::format_g17;
use crate::measure::{Measure, Node};
use crate::rng::Rng;
use crate::sampling::{draw, is_probability};
use crate::verify::{self, Region};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MEASURE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "measurekit", version, about = "Evaluate, sample and check measure expressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the log-density of an expression at a point.
    Logdensity {
        /// JSON expression file.
        #[arg(long)]
        expr: PathBuf,
        /// Reference measure file, or "base" for the expression's own base measure.
        #[arg(long)]
        wrt: Option<String>,
        /// Point as JSON, e.g. 1.5 or [0, 1].
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Draw reproducible samples, one per line.
    Sample {
        #[arg(long)]
        expr: PathBuf,
        /// Number of samples.
        #[arg(short = 'n')]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Prefix length for chains.
        #[arg(long)]
        take: Option<usize>,
    },
    /// Integrate (or sum) the density over [lo, hi] and compare the mass with 1.
    Check {
        #[arg(long)]
        expr: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

enum Failure {
    Usage(String),
    Measure(String),
}

impl From<MeasureError> for Failure {
    fn from(e: MeasureError) -> Self {
        if e.is_measure_theoretic() {
            Failure::Measure(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        match &e.source_error {
            Some(m) if m.is_measure_theoretic() => Failure::Measure(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Runs the CLI with `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Logdensity { expr, wrt, at } => cmd_logdensity(&expr, wrt.as_deref(), &at, out),
        Command::Sample { expr, n, seed, take } => cmd_sample(&expr, n, seed, take, out),
        Command::Check { expr, lo, hi, tol } => cmd_check(&expr, lo, hi, tol, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Measure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_MEASURE
        }
    }
}

fn load(path: &Path) -> Result<Measure, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    doc::parse_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_logdensity(expr: &Path, wrt: Option<&str>, at: &str, out: &mut dyn Write) -> Result<(), Failure> {
    let mu = load(expr)?;
    let x = doc::parse_point_str(at).map_err(|e| usage(format!("--at: {}", e.message)))?;
    let v = match wrt {
        None | Some("base") => logdensity2(&mu, &x)?,
        Some(file) => logdensity3(&mu, &load(Path::new(file))?, &x)?,
    };
    writeln!(out, "{v}").map_err(usage)
}

fn cmd_sample(expr: &Path, n: usize, seed: u64, take: Option<usize>, out: &mut dyn Write) -> Result<(), Failure> {
    let mu = load(expr)?;
    let root = Rng::new(seed);
    if let Node::Chain(spec) = mu.node() {
        let k = take.ok_or_else(|| usage("sampling a chain needs --take K"))?;
        for i in 0..n {
            let path = spec.sample(root.split(i as u64).next_u64()).take_prefix(k)?;
            let line: Vec<String> = path.iter().map(ToString::to_string).collect();
            writeln!(out, "[{}]", line.join(", ")).map_err(usage)?;
        }
        return Ok(());
    }
    if take.is_some() {
        return Err(usage("--take only applies to chains"));
    }
    if !is_probability(&mu) {
        return Err(MeasureError::NotProbability(mu.to_string()).into());
    }
    for i in 0..n {
        writeln!(out, "{}", draw(&mu, &mut root.split(i as u64))?).map_err(usage)?;
    }
    Ok(())
}

fn cmd_check(expr: &Path, lo: f64, hi: f64, tol: f64, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let mu = load(expr)?;
    if !(tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let region = if verify::is_discrete(&mu) {
        Region::IntegerRange(lo.ceil() as i64, hi.floor() as i64)
    } else {
        Region::Interval(lo, hi)
    };
    let report = verify::mass_report(&mu, &region, tol)?;
    if let Some(w) = &report.tail_warning {
        let _ = writeln!(err, "warning: {w}");
    }
    let verdict = if (report.mass - 1.0).abs() <= 10.0 * tol { "PASS" } else { "FAIL" };
    writeln!(out, "{} {verdict}", format_g17(report.mass)).map_err(usage)
}
