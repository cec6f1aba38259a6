//! `gbdt`: build, sample and check GBDT-dressed Dirac–Weyl potentials.
//!
//! Exit status: 0 on success, 1 when a check or computation fails, 2 when
//! the input cannot be parsed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ParseError;

#[derive(Parser, Debug)]
#[command(name = "gbdt", version, about = "Explicit GBDT potentials and wavefunctions for Dirac–Weyl systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the operator identity, Hermiticity, positivity and realness of a triple.
    Validate(ValidateArgs),
    /// Emit the dressed potential ũ(x) as CSV.
    Potential(PotentialArgs),
    /// Emit the dressed wavefunction ψ̃(x, y) as CSV.
    Solve(SolveArgs),
    /// Run the verification suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Print a triple as JSON, suitable for `--triple`.
    Example(ExampleArgs),
}

/// Triple selection shared by all subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct TripleArgs {
    /// Built-in example 1-4.
    #[arg(long)]
    pub example: Option<u8>,
    /// Example 1: the real scalar 𝒜.
    #[arg(long = "calA", allow_negative_numbers = true)]
    pub cal_a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m2: Option<f64>,
    /// `+` or `-`.
    #[arg(long, allow_hyphen_values = true)]
    pub sign1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub sign2: Option<String>,
    /// Order of a randomized example 3/4.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    /// Examples 3/4: comma-separated real h1 (disables randomization).
    #[arg(long, allow_hyphen_values = true)]
    pub h1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h2: Option<String>,
    /// Example 3: real skew part as nested JSON rows.
    #[arg(long)]
    pub skew: Option<String>,
    /// Triple as a JSON file path or inline JSON.
    #[arg(long)]
    pub triple: Option<String>,
    /// JSON run configuration; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub triple: TripleArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ProfileArgs {
    /// x-grid `min:max:step`; the endpoint is kept when within half a step.
    #[arg(long, allow_hyphen_values = true)]
    pub xgrid: Option<String>,
    /// Single x value instead of a grid.
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Seed potential: `zero`, `constant:c` or `gaussian:amp,center,width`.
    #[arg(long, allow_hyphen_values = true)]
    pub seed: Option<String>,
    /// S(x) route for the zero seed: auto, sylvester, vanloan, quadrature.
    #[arg(long)]
    pub method: Option<String>,
    /// Local error tolerance of the ODE path.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub triple: TripleArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// ħ·v_F product; with `--energy` adds a `U` column.
    #[arg(long = "hbar-vf", allow_negative_numbers = true)]
    pub hbar_vf: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub energy: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub triple: TripleArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub ygrid: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    /// `e<k>`, `0`, comma-separated reals, or JSON `[[re, im], ..]`.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub triple: TripleArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub ygrid: Option<String>,
    /// Single h vector to check instead of the standard basis.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Shift ũ by 0.01 in the residual check (negative control).
    #[arg(long)]
    pub inject_error: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ExampleArgs {
    #[command(flatten)]
    pub triple: TripleArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How a command ended when it did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Unusable input.
    Parse(anyhow::Error),
    /// A check failed or the computation aborted.
    Run(anyhow::Error),
    /// A check failed and its diagnostics were already printed.
    Silent,
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse(e.0)
    }
}

impl From<gbdt_core::Error> for Failure {
    fn from(e: gbdt_core::Error) -> Self {
        Failure::Run(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Potential(a) => commands::potential(a),
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
        Command::Example(a) => commands::example(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Silent) => ExitCode::from(1),
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Parse(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
