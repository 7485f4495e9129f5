//! `schrostab`: spectra, resolvent sweeps, energy decay and identity checks
//! for the order-reduction and classical semi-discretizations.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 numerical or I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schrostab_core::{Propagator, Scheme};
use serde::Serialize;

mod commands;
mod error;
mod output;
mod svg;

use error::CliResult;
use output::Format;

#[derive(Debug, Parser)]
#[command(name = "schrostab", version, about = "Uniform stability experiments for boundary-damped Schrödinger semi-discretizations")]
struct Cli {
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "SCHROSTAB_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral abscissa of the generator for each N.
    Spectrum(SpectrumArgs),
    /// Resolvent norm ||(iβ - A)^{-1}|| over a frequency grid.
    Resolvent(ResolventArgs),
    /// Time-integrate the semi-discrete system and record the energy.
    Simulate(SimulateArgs),
    /// Run the exact-identity suite; exit 1 if any gap exceeds its tolerance.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    #[value(alias = "or")]
    OrderReduction,
    #[value(alias = "cl")]
    Classical,
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeChoice::OrderReduction => vec![Scheme::OrderReduction],
            SchemeChoice::Classical => vec![Scheme::Classical],
            SchemeChoice::Both => Scheme::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPreset {
    Random,
    Sine,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropagatorArg {
    Midpoint,
    Exponential,
}

impl From<PropagatorArg> for Propagator {
    fn from(p: PropagatorArg) -> Self {
        match p {
            PropagatorArg::Midpoint => Propagator::Midpoint,
            PropagatorArg::Exponential => Propagator::Exponential,
        }
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: schrostab_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// CSV path; JSON and SVG sidecars share its stem.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,json")]
    format: Vec<Format>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value = "both")]
    scheme: SchemeChoice,

    /// Interior node counts, each at most 2047.
    #[arg(long, value_delimiter = ',', default_value = "9,19,49,99,199,499,999")]
    n_list: Vec<usize>,

    /// Feedback gain.
    #[arg(long, default_value_t = 1.0)]
    k: f64,

    /// Also write every eigenvalue to `<stem>_eigenvalues.csv`.
    #[arg(long)]
    eigenvalues: bool,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ResolventArgs {
    #[arg(long, value_enum, default_value = "both")]
    scheme: SchemeChoice,

    #[arg(long, value_delimiter = ',', default_value = "15,63,255")]
    n_list: Vec<usize>,

    #[arg(long, default_value_t = 1.0)]
    k: f64,

    /// Exact frequencies; replaces the generated grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    betas: Option<Vec<f64>>,

    /// Linear grid bounds; default ±2(π(N+1))².
    #[arg(long, allow_hyphen_values = true)]
    beta_min: Option<f64>,

    #[arg(long)]
    beta_max: Option<f64>,

    #[arg(long, default_value_t = 401)]
    linear_steps: usize,

    /// Log-spaced tail points ±10^e for 0 <= e <= this value.
    #[arg(long, default_value_t = 6.0)]
    log_decades: f64,

    #[arg(long, default_value_t = 10)]
    log_points_per_decade: usize,

    /// Skip the extra samples at the imaginary parts of the eigenvalues.
    #[arg(long)]
    no_eigen_imag: bool,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_scheme, default_value = "order_reduction")]
    scheme: Scheme,

    #[arg(long, default_value_t = 63)]
    n: usize,

    #[arg(long, default_value_t = 1.0)]
    k: f64,

    #[arg(long, default_value_t = 1e-3)]
    dt: f64,

    #[arg(long, default_value_t = 5.0)]
    t_final: f64,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, value_enum, default_value = "random")]
    init: InitPreset,

    /// CSV with header `re,im` and N+1 rows, for `--init file`.
    #[arg(long)]
    init_file: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "midpoint")]
    propagator: PropagatorArg,

    /// Decay fit window; defaults to the second half of the run.
    #[arg(long)]
    fit_start: Option<f64>,

    #[arg(long)]
    fit_end: Option<f64>,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,7,64,255,1023")]
    n_list: Vec<usize>,

    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    k_list: Vec<f64>,

    #[arg(long, default_value_t = 1000)]
    samples: usize,

    #[arg(long, default_value_t = 20240607)]
    seed: u64,

    /// Frequency used by the multiplier functionals.
    #[arg(long, default_value_t = 3.7, allow_hyphen_values = true)]
    beta: f64,

    /// Largest N for the checks that need the dense generator.
    #[arg(long, default_value_t = 255)]
    dense_cap: usize,

    /// Inject a fault of this relative size into one dense generator entry.
    #[arg(long)]
    perturb: Option<f64>,

    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Spectrum(a) => commands::spectrum(&cli.out_dir, &a),
        Command::Resolvent(a) => commands::resolvent(&cli.out_dir, &a),
        Command::Simulate(a) => commands::simulate(&cli.out_dir, &a),
        Command::Verify(a) => commands::verify(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
