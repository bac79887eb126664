//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 for usage or
//! input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds::audit;
use crate::error::{Error, Result};
use crate::harness::{oracle_check, run_sweep, verify_instance, DistanceSummary, PmfTable, SweepPlan, Tolerances};
use crate::instances::{validate, GeneratorSpec, InstanceSource, InstanceSpec};
use crate::parseval::DEFAULT_QUAD_CAP;
use crate::report::{emit_report, emit_rows, Format, Record};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "genbinom", version, about = "Poisson-binomial vs binomial: distances, bounds and audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Poisson-binomial and the mean-matched binomial mass functions.
    Pmf(InstanceArgs),
    /// Print distances, with χ² computed by every route.
    Distance(InstanceArgs),
    /// Evaluate every bound against the exact quantities.
    Bounds(InstanceArgs),
    /// Run the invariant suite on one instance.
    Verify(InstanceArgs),
    /// Audit a seeded family of instances.
    Sweep(SweepArgs),
    /// Compare floating-point results with exact rational arithmetic (n <= 16).
    OracleCheck(InstanceArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, default_value = "json", value_parser = parse_format)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["probs", "file", "generate"]))]
pub struct InstanceArgs {
    /// Comma-separated probabilities, e.g. 0.3,0.7
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub probs: Option<Vec<f64>>,
    /// JSON instance file.
    #[arg(long, value_name = "PATH")]
    pub file: Option<PathBuf>,
    /// Generator spec: n=..,low=..,high=..,seed=..
    #[arg(long, value_name = "SPEC")]
    pub generate: Option<String>,
    /// Override the generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest n for the contour-integral route.
    #[arg(long, default_value_t = DEFAULT_QUAD_CAP)]
    pub quad_cap: usize,
    /// Relative tolerance for agreement between χ² routes.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Number of instances.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Base seed; instance i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', default_value = "4,10,50,200")]
    pub sizes: Vec<usize>,
    /// Semicolon-separated ranges low:high.
    #[arg(long, default_value = "0.4:0.6;0.1:0.9;0.01:0.99", value_parser = parse_ranges)]
    pub ranges: Ranges,
    /// Also emit one row per instance.
    #[arg(long)]
    pub per_instance: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranges(pub Vec<(f64, f64)>);

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_ranges(s: &str) -> std::result::Result<Ranges, String> {
    s.split(';')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| format!("expected low:high, got `{part}`"))?;
            let lo = lo.trim().parse::<f64>().map_err(|e| e.to_string())?;
            let hi = hi.trim().parse::<f64>().map_err(|e| e.to_string())?;
            Ok((lo, hi))
        })
        .collect::<std::result::Result<Vec<_>, String>>()
        .map(Ranges)
}

impl InstanceArgs {
    pub fn instance(&self) -> Result<InstanceSpec> {
        if let Some(probs) = &self.probs {
            return validate(probs);
        }
        if let Some(path) = &self.file {
            return match InstanceSource::from_path(path)? {
                InstanceSource::Generate(mut g) => {
                    if let Some(seed) = self.seed {
                        g.seed = seed;
                    }
                    g.build()
                }
                other => other.resolve(),
            };
        }
        let text = self.generate.as_deref().ok_or(Error::EmptyInput)?;
        let mut g: GeneratorSpec = text.parse()?;
        if let Some(seed) = self.seed {
            g.seed = seed;
        }
        g.build()
    }

    fn tolerances(&self) -> Result<Tolerances> {
        match self.tol {
            None => Ok(Tolerances::default()),
            Some(t) if t.is_finite() && t > 0.0 => Ok(Tolerances::with_agreement(t)),
            Some(t) => Err(Error::BadParameter(format!("--tol must be positive, got {t}"))),
        }
    }
}

enum Outcome {
    Passed(Vec<u8>),
    Failed(Vec<u8>),
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let output = match &cli.command {
        Command::Sweep(a) => &a.output,
        Command::Pmf(a) | Command::Distance(a) | Command::Bounds(a) | Command::Verify(a) | Command::OracleCheck(a) => {
            &a.output
        }
    };
    let (bytes, code) = match execute(&cli.command) {
        Ok(Outcome::Passed(b)) => (b, EXIT_OK),
        Ok(Outcome::Failed(b)) => (b, EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let written = match &output.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    code
}

fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Pmf(a) => {
            let table = PmfTable::new(&a.instance()?)?;
            Ok(Outcome::Passed(match a.output.format {
                Format::Json => emit_report(&table, Format::Json),
                Format::Csv => {
                    let rows = table.rows();
                    let refs: Vec<&dyn Record> = rows.iter().map(|r| r as &dyn Record).collect();
                    emit_rows(&refs, Format::Csv)
                }
            }))
        }
        Command::Distance(a) => {
            let summary = DistanceSummary::new(&a.instance()?, a.quad_cap)?;
            Ok(Outcome::Passed(emit_report(&summary, a.output.format)))
        }
        Command::Bounds(a) => {
            let report = audit(&a.instance()?)?;
            Ok(Outcome::Passed(emit_report(&report, a.output.format)))
        }
        Command::Verify(a) => {
            let report = verify_instance(&a.instance()?, a.quad_cap, &a.tolerances()?)?;
            Ok(outcome(report.all_passed(), emit_report(&report, a.output.format)))
        }
        Command::OracleCheck(a) => {
            let report = oracle_check(&a.instance()?, &a.tolerances()?)?;
            Ok(outcome(report.all_passed(), emit_report(&report, a.output.format)))
        }
        Command::Sweep(a) => {
            let plan = SweepPlan {
                count: a.count,
                base_seed: a.seed,
                sizes: a.sizes.clone(),
                ranges: a.ranges.0.clone(),
            };
            let (reports, summary) = run_sweep(&plan)?;
            let bytes = if a.per_instance {
                let mut refs: Vec<&dyn Record> = reports.iter().map(|r| r as &dyn Record).collect();
                refs.push(&summary);
                emit_rows(&refs, a.output.format)
            } else {
                emit_report(&summary, a.output.format)
            };
            Ok(outcome(summary.violations() == 0, bytes))
        }
    }
}

fn outcome(passed: bool, bytes: Vec<u8>) -> Outcome {
    if passed {
        Outcome::Passed(bytes)
    } else {
        Outcome::Failed(bytes)
    }
}
