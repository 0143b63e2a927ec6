//! `spl`: run the sector-mass verification suites from the command line.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 bad input or usage,
//! 3 numerical failure.

mod suites;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "spl", version, about = "Sector-mass inequalities for planar measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Input file (polynomial or measure JSON); inline JSON is accepted too.
    #[arg(long, global = true)]
    pub input: Option<String>,

    /// Polynomial coefficients c0,c1,...,cd in ascending order.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub coeffs: Option<String>,

    /// Sector half-angle for `extremal`; window `a` for `mellin-check`.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,

    /// Number of grid points for the averaged bound (t-grid for `mellin-check`).
    #[arg(long = "a-grid", global = true, default_value_t = 200)]
    pub a_grid: usize,

    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output path; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Roots, empirical measure and all inequality checks for one polynomial.
    VerifyPoly,
    /// Hypotheses and inequality checks for a measure given as JSON.
    VerifyMeasure,
    /// Equality verification for the extremal measure at `--alpha`.
    Extremal,
    /// Mellin closed form, transform identity and kernel-limit fit.
    MellinCheck,
    /// The averaged bound over many polynomials.
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
    Io(String),
}

impl From<spl_core::Error> for Failure {
    fn from(e: spl_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl Failure {
    fn emit(&self) -> ExitCode {
        let (kind, message, code) = match self {
            Failure::Input(m) => ("input", m, 2),
            Failure::Io(m) => ("io", m, 2),
            Failure::Numerical(m) => ("numerical", m, 3),
        };
        let record = serde_json::json!({ "error": { "kind": kind, "message": message } });
        eprintln!("{record}");
        ExitCode::from(code)
    }
}

/// Output of a suite: the rendered report and whether every check passed.
pub struct Rendered {
    pub body: String,
    pub sidecar: Option<(String, String)>,
    pub passed: bool,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("SPL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Input(format!("SPL_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        spl_core::exec::configure_threads(n);
    }
    Ok(())
}

fn write_output(cli: &Cli, out: &Rendered) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(e.to_string());
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &out.body).map_err(io)?;
            if let Some((suffix, text)) = &out.sidecar {
                let mut side = path.clone().into_os_string();
                side.push(suffix);
                std::fs::write(PathBuf::from(side), text).map_err(io)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.body.as_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    if cli.a_grid < 2 {
        return Err(Failure::Input(format!("--a-grid must be at least 2, got {}", cli.a_grid)));
    }
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", cli.tol)));
    }
    configure_threads()?;
    let rendered = match cli.command {
        Command::VerifyPoly => suites::verify_poly(cli)?,
        Command::VerifyMeasure => suites::verify_measure(cli)?,
        Command::Extremal => suites::extremal(cli)?,
        Command::MellinCheck => suites::mellin_check(cli)?,
        Command::Batch => suites::batch(cli)?,
    };
    write_output(cli, &rendered)?;
    Ok(rendered.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return Failure::Input(e.to_string().trim_end().to_string()).emit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => f.emit(),
    }
}
