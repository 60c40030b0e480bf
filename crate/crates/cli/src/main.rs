//! Command-line interface for the warp-soliton library.
//!
//! Subcommands cover the full pipeline: ground-state profile, expansion
//! constants, κ classification, parameter scans, curved-soliton corrections,
//! the mass-derivative stability test, operator spectra, and warp geometry
//! reports.  Every run prints a JSON summary to standard output; file
//! outputs are versioned with a `schema` field and accompanied by a run
//! manifest referencing them by digest.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, malformed input files,
//! invalid parameter values), 2 numerical non-convergence.

mod cache;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use warp_soliton_core::CoreError;

/// Solitary waves and their stability on rotationally symmetric
/// warped-product manifolds.
#[derive(Debug, Parser)]
#[command(name = "warp-soliton", version, about)]
pub struct Cli {
    /// TOML file overriding solver defaults (unknown keys rejected).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Plus,
    Minus,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the planar cubic ground-state profile and report mass and
    /// residual; optionally write the spectral coefficients to JSON.
    GroundState {
        /// Basis degree override (default from config).
        #[arg(long, value_name = "N")]
        nmax: Option<usize>,
        /// Write the profile JSON here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compute the mass-expansion constants b₁ and b₂ with their
    /// cross-checks.
    Constants,
    /// Evaluate κ = c₁²b₁ + c₂b₂ and classify the warp parameters.
    Kappa {
        #[arg(long, allow_hyphen_values = true, value_name = "X")]
        c1: f64,
        #[arg(long, allow_hyphen_values = true, value_name = "Y")]
        c2: f64,
    },
    /// Evaluate κ over a parameter rectangle and write a CSV table.
    Scan {
        /// c₁ range as A:B (inclusive).
        #[arg(long, allow_hyphen_values = true, value_name = "A:B")]
        c1: String,
        /// c₂ range as C:D (inclusive).
        #[arg(long, allow_hyphen_values = true, value_name = "C:D")]
        c2: String,
        /// Sample points per axis (≥ 2).
        #[arg(long, value_name = "N")]
        steps: usize,
        /// CSV output path.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Worker threads for the scan (default: all cores).
        #[arg(long, value_name = "J")]
        jobs: Option<usize>,
    },
    /// Solve the fixed-point correction ρ_α of the curved profile.
    Rho {
        #[arg(long, value_name = "A")]
        alpha: f64,
        /// Warp description JSON ({"schema":"warp-soliton/warp-v1",...}).
        #[arg(long, value_name = "FILE")]
        warp: PathBuf,
        /// Write radii and ρ samples here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Finite-difference mass-derivative sign test at scaling α.
    Vk {
        #[arg(long, value_name = "FILE")]
        warp: PathBuf,
        #[arg(long, value_name = "A")]
        alpha: f64,
    },
    /// Low-lying spectrum of a linearized operator.
    Spectrum {
        #[arg(long, value_enum)]
        variant: VariantArg,
        /// Scaling parameter: a number, or "inf" for the Euclidean limit.
        #[arg(long, value_name = "A|inf")]
        alpha: String,
        #[arg(long, value_name = "FILE")]
        warp: PathBuf,
        /// How many eigenvalues (1..=10).
        #[arg(long, value_name = "K")]
        k: usize,
    },
    /// Curvature samples and the asymptotic potential constant of a warp.
    Geometry {
        #[arg(long, value_name = "FILE")]
        warp: PathBuf,
        /// Ambient dimension.
        #[arg(long, default_value_t = 2, value_name = "D")]
        d: usize,
    },
}

/// Failure classes carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed files, or invalid parameter values → exit 1.
    Usage(String),
    /// The numerics did not converge or failed a validation gate → exit 2.
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses the arguments, runs the selected pipeline, and maps failures to
/// the exit-code contract.
pub fn dispatch<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(argv.iter()) {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 for usage problems by default; this tool reserves
            // 2 for numerical failure, so usage problems map to 1.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(&cli, &argv) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("error: {m}");
            2
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(dispatch(std::env::args_os()))
}
