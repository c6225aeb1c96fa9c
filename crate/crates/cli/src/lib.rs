//! Front end for the `nmrqc` binary: config ingestion, command dispatch
//! and file emission.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config or validation error,
//! 3 numerical failure.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use nmrqc_core::Error;

use config::{Format, RunConfig};
use output::Report;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
    /// Offending items, one per line on stderr.
    pub details: Vec<String>,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CONFIG, message: message.into(), details: Vec::new() }
    }

    pub fn io(e: impl fmt::Display) -> Self {
        CliError { code: EXIT_IO, message: format!("i/o: {e}"), details: Vec::new() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_)
            | Error::SizeCap { .. }
            | Error::DuplicatePosition(_)
            | Error::DimensionMismatch { .. }
            | Error::InteriorPoint(_)
            | Error::Unsupported(_)
            | Error::InvalidState(_) => EXIT_CONFIG,
            Error::ConvergenceFailure { .. }
            | Error::Validation(_)
            | Error::Overlap(..)
            | Error::StepUnderflow(_)
            | Error::BracketFailure { .. }
            | Error::NotUnitary(_) => EXIT_NUMERICAL,
            Error::Io(_) => EXIT_IO,
        };
        let details = match &e {
            Error::Validation(v) => v.iter().map(|x| format!("offender {x}")).collect(),
            _ => Vec::new(),
        };
        CliError { code, message: e.to_string(), details }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nmrqc", version, about = "Fluorapatite NMR quantum computer models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (overrides output.threads).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Omit the timestamp header from output files.
    #[arg(long, global = true)]
    pub no_meta: bool,
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Coupling table, b(λ) table and σ/δω with its convergence trace.
    Lattice,
    /// Field map, splitting profile and homogeneity report.
    Magnet,
    /// Interleaved broadband and selective timeline with validation report.
    Schedule {
        /// Keep the coupling between planes i and j.
        #[arg(long, value_name = "I,J", value_parser = parse_pair)]
        recouple: Option<(usize, usize)>,
    },
    /// Runs a schedule on the configured spin system.
    Simulate,
    /// Required B/T and gate budget over a qubit grid.
    Scalability,
    /// Cyclic adiabatic inversion readout trace.
    Readout,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected I,J, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

fn meta_line(command: &str) -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("nmrqc {} {command} generated_unix_s={secs}", env!("CARGO_PKG_VERSION"))
}

/// Runs one command to completion, writing its files only on success.
/// Returns the paths written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(cli)?;
    let threads = cli.threads.unwrap_or(cfg.output.threads);
    if threads == 0 {
        return Err(CliError::config("threads must be at least 1"));
    }
    let format = cli.format.unwrap_or(cfg.output.format);
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let ctx = commands::Ctx { cfg: &cfg, verbose: cli.verbose };
    let report: Report = pool.install(|| match cli.command {
        Command::Lattice => commands::lattice(&ctx),
        Command::Magnet => commands::magnet(&ctx),
        Command::Schedule { recouple } => commands::schedule(&ctx, recouple),
        Command::Simulate => commands::simulate(&ctx),
        Command::Scalability => commands::scalability(&ctx),
        Command::Readout => commands::readout(&ctx),
    })?;

    let meta = (!cli.no_meta).then(|| meta_line(&report.command));
    let files = output::render(&report, format, meta.as_deref())?;
    let written = output::write_all(&out_dir, &files)?;
    if cli.verbose {
        for p in &written {
            eprintln!("nmrqc: wrote {}", p.display());
        }
    }
    Ok(written)
}

/// Parses `args` (program name first) and runs the command in-process.
pub fn run_from_args<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::config(e.to_string()))?;
    run(&cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pair("1,2"), Ok((1, 2)));
        assert_eq!(parse_pair(" 0 , 3"), Ok((0, 3)));
        assert!(parse_pair("1").is_err());
        assert!(parse_pair("a,2").is_err());
    }

    #[test]
    fn error_codes_follow_the_error_kind() {
        assert_eq!(CliError::from(Error::SizeCap { requested: 13, cap: 12 }).code, EXIT_CONFIG);
        assert_eq!(CliError::from(Error::InteriorPoint([0.0; 3])).code, EXIT_CONFIG);
        let v = Error::Validation(vec![nmrqc_core::Violation { index: 4, reason: "too wide".into() }]);
        let e = CliError::from(v);
        assert_eq!(e.code, EXIT_NUMERICAL);
        assert_eq!(e.details, ["offender #4: too wide"]);
        assert_eq!(CliError::from(Error::ConvergenceFailure { doublings: 12, last_change: 1.0 }).code, EXIT_NUMERICAL);
    }

    #[test]
    fn unknown_and_versioned_keys() {
        assert!(RunConfig::parse(r#"{"schema_version": 1}"#).is_ok());
        assert_eq!(RunConfig::parse(r#"{"schema_version": 2}"#).unwrap_err().code, EXIT_CONFIG);
        assert_eq!(RunConfig::parse(r#"{"schema_version": 1, "bogus": 0}"#).unwrap_err().code, EXIT_CONFIG);
        assert_eq!(
            RunConfig::parse(r#"{"schema_version": 1, "lattice": {"a": 1e-10}}"#).unwrap_err().code,
            EXIT_CONFIG
        );
        assert_eq!(RunConfig::parse("{").unwrap_err().code, EXIT_CONFIG);
    }
}
