//! Command-line front end.
//!
//! Exit codes: 0 success (certificate verified), 1 certificate rejected or no
//! certificate produced, 2 usage, I/O or parse errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checker::{verify_reader, CheckOptions};
use crate::format::{read_certificate, read_problem, write_certificate, FormatError};
use crate::generate::lin_chain;
use crate::renderer::render_html;
use crate::solver::{solve_milp, SolveStatus, SolverConfig};
use crate::tightener::tighten;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "milpcert",
    version,
    about = "Check, tighten, render and produce exact MILP certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify a certificate in one streaming pass.
    Check {
        file: PathBuf,
        /// Print rule counts and the peak number of live constraints.
        #[arg(long)]
        stats: bool,
        /// Check arithmetic on the calling thread only.
        #[arg(long)]
        sequential: bool,
        /// Keep every constraint in memory regardless of last-use indices.
        #[arg(long)]
        no_evict: bool,
    },
    /// Fill in last-use indices, optionally dropping derivations the goal does not need.
    #[command(name = "ttn", alias = "tighten")]
    Tighten {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        prune: bool,
    },
    /// Render a certificate as a static HTML page.
    Html { input: PathBuf, output: PathBuf },
    /// Solve a problem file and write a certificate for the result.
    Solve {
        problem: PathBuf,
        output: PathBuf,
        /// Round node objective bounds when the objective is integral.
        #[arg(long)]
        cg_objective: bool,
        /// Always branch, never close a node by rounding a variable bound.
        #[arg(long)]
        no_bound_rounding: bool,
        #[arg(long, default_value_t = SolverConfig::default().node_limit)]
        node_limit: usize,
    },
    /// Write a synthetic chain of `lin` derivations.
    Chain { length: usize, output: PathBuf },
}

#[derive(Debug)]
enum CliError {
    Format(FormatError),
    Other(String),
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Format(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Format(FormatError::Io(e))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

/// Runs the tool with explicit output streams; returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(CliError::Format(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
        Err(CliError::Other(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Check {
            file,
            stats,
            sequential,
            no_evict,
        } => {
            let mut options = if sequential {
                CheckOptions::sequential()
            } else {
                CheckOptions::default()
            };
            options.evict = !no_evict;
            let report = verify_reader(open(&file)?, options)?;
            writeln!(out, "{}", report.summary())?;
            if stats {
                let s = &report.statistics;
                writeln!(
                    out,
                    "asm {} lin {} rnd {} uns {} solutions {} peak-live {}",
                    s.asm, s.lin, s.rnd, s.uns, s.solutions, s.peak_live
                )?;
            }
            Ok(if report.is_verified() { EXIT_OK } else { EXIT_REJECTED })
        }
        Command::Tighten { input, output, prune } => {
            let cert = read_certificate(open(&input)?)?;
            let tight = tighten(&cert, prune).map_err(|e| CliError::Other(e.to_string()))?;
            let mut w = create(&output)?;
            write_certificate(&tight, &mut w)?;
            w.flush()?;
            writeln!(
                out,
                "wrote {} derivations ({} removed)",
                tight.derivations.len(),
                cert.derivations.len() - tight.derivations.len()
            )?;
            Ok(EXIT_OK)
        }
        Command::Html { input, output } => {
            let cert = read_certificate(open(&input)?)?;
            let mut w = create(&output)?;
            w.write_all(render_html(&cert).as_bytes())?;
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::Solve {
            problem,
            output,
            cg_objective,
            no_bound_rounding,
            node_limit,
        } => {
            let p = read_problem(open(&problem)?)?;
            let config = SolverConfig {
                node_limit,
                cg_objective,
                bound_rounding: !no_bound_rounding,
            };
            let outcome = solve_milp(&p, &config).map_err(|e| CliError::Other(e.to_string()))?;
            match &outcome.status {
                SolveStatus::Optimal { value, .. } => writeln!(out, "optimal: {value} ({} nodes)", outcome.nodes)?,
                SolveStatus::Infeasible => writeln!(out, "infeasible ({} nodes)", outcome.nodes)?,
                SolveStatus::Unbounded => {
                    writeln!(
                        out,
                        "unbounded: the LP relaxation has no finite optimum; no certificate written"
                    )?;
                    return Ok(EXIT_REJECTED);
                }
            }
            if let Some(cert) = &outcome.certificate {
                let mut w = create(&output)?;
                write_certificate(cert, &mut w)?;
                w.flush()?;
            }
            Ok(EXIT_OK)
        }
        Command::Chain { length, output } => {
            let mut w = create(&output)?;
            write_certificate(&lin_chain(length), &mut w)?;
            w.flush()?;
            Ok(EXIT_OK)
        }
    }
}
