//! `largesieve`: runs the sieve experiments and writes JSON or CSV reports.
//!
//! Exit status is 0 when every check in the report passes, 1 when a check
//! fails and 2 for invalid invocations or inputs. Failures also print a
//! one-line JSON error record on stderr.

mod commands;
mod output;
mod specs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::{CliError, Outcome};
use crate::specs::{OmegaSpec, PolySpec};

#[derive(Debug, Parser)]
#[command(name = "largesieve", version, about = "Amplified large sieve experiments")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Directory for reports named after the subcommand, used when
    /// `--output` is absent.
    #[arg(long, env = "LARGESIEVE_OUT_DIR", global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact sieve bounds Δ/H, Δ/K and ΔA/B² checked against a brute-force sift.
    ClassicalBound(ClassicalArgs),
    /// List the integers n <= N that avoid every Ω_p.
    Sift(SiftArgs),
    /// Harmonic and dual large sieve ratios against the Gram operator norm.
    DualCheck(DualArgs),
    /// Integers that are squares modulo every p <= √N, over a grid of N.
    SquaresDemo(SquaresArgs),
    /// Variance of Σ_p Y_p(λ_f(p)) over an eigenvalue ensemble.
    ModformCor1(Cor1Args),
    /// Probability that every Y_p drops to β_{p,0} - δ_p, against the amplified bound.
    ModformCor2(Cor2Args),
    /// Forms with λ_f(p) <= 0 for all p <= (ln q)^A.
    SignChange(SignChangeArgs),
    /// Check a polynomial in the X_m basis as a minorant of sgn.
    VerifyMinorant(MinorantArgs),
}

#[derive(Debug, Args)]
pub struct ClassicalArgs {
    #[arg(long = "N")]
    pub n: u64,
    /// Sieve range; taken from the file for `--omega file:...`.
    #[arg(long = "Q")]
    pub q: Option<u64>,
    /// zero | squares | empty | random:<seed> | file:<path>
    #[arg(long, default_value = "zero")]
    pub omega: OmegaSpec,
    /// Override Δ = Q² - 1 + N (rational, e.g. 40 or 81/2).
    #[arg(long)]
    pub delta: Option<String>,
}

#[derive(Debug, Args)]
pub struct SiftArgs {
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long = "Q")]
    pub q: Option<u64>,
    #[arg(long, default_value = "zero")]
    pub omega: OmegaSpec,
}

#[derive(Debug, Args)]
pub struct DualArgs {
    /// One or more lengths, comma separated.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    /// One or more moduli bounds, comma separated.
    #[arg(long = "Q", value_delimiter = ',', required = true)]
    pub q: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SquaresArgs {
    #[arg(long = "N", value_delimiter = ',', default_values_t = [10_000u64, 100_000, 1_000_000])]
    pub n: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Eigenvalue CSV (form_id,weight,p,lambda); synthetic Sato–Tate forms otherwise.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Largest prime read from `--ensemble` (defaults to the sieve range).
    #[arg(long)]
    pub prime_bound: Option<u64>,
    /// Level q of the forms.
    #[arg(long, default_value_t = 1_000_003)]
    pub level: u64,
    /// Weight k declared for a loaded ensemble.
    #[arg(long)]
    pub weight_k: Option<u32>,
    /// Synthetic ensemble size.
    #[arg(long, default_value_t = 10_000)]
    pub forms: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the ensemble used, in the `--ensemble` CSV layout.
    #[arg(long)]
    pub save_ensemble: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Cor1Args {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long = "Q", default_value_t = 10)]
    pub q: u64,
    /// default-sign | file:<path>
    #[arg(long, default_value = "default-sign")]
    pub poly: PolySpec,
}

#[derive(Debug, Args)]
pub struct Cor2Args {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long = "Q", default_value_t = 10)]
    pub q: u64,
    /// Amplifier length.
    #[arg(long = "N", default_value_t = 210)]
    pub n: u64,
    #[arg(long, default_value = "default-sign")]
    pub poly: PolySpec,
}

#[derive(Debug, Args)]
pub struct SignChangeArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long = "A", default_value_t = 2.0)]
    pub a: f64,
}

#[derive(Debug, Args)]
pub struct MinorantArgs {
    #[arg(long, default_value = "default-sign")]
    pub poly: PolySpec,
    /// Uniform grid size on [-2, 2].
    #[arg(long, default_value_t = 100_000)]
    pub grid: usize,
    /// Points in the plottable (x, Y, sgn) table written with `--format csv`.
    #[arg(long, default_value_t = 401)]
    pub graph_points: usize,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ClassicalBound(_) => "classical-bound",
            Command::Sift(_) => "sift",
            Command::DualCheck(_) => "dual-check",
            Command::SquaresDemo(_) => "squares-demo",
            Command::ModformCor1(_) => "modform-cor1",
            Command::ModformCor2(_) => "modform-cor2",
            Command::SignChange(_) => "sign-change",
            Command::VerifyMinorant(_) => "verify-minorant",
        }
    }

    fn run(&self) -> Result<Outcome, CliError> {
        match self {
            Command::ClassicalBound(a) => commands::classical_bound(a),
            Command::Sift(a) => commands::sift(a),
            Command::DualCheck(a) => commands::dual_check(a),
            Command::SquaresDemo(a) => commands::squares_demo(a),
            Command::ModformCor1(a) => commands::modform_cor1(a),
            Command::ModformCor2(a) => commands::modform_cor2(a),
            Command::SignChange(a) => commands::sign_change(a),
            Command::VerifyMinorant(a) => commands::verify_minorant(a),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return CliError::Usage(e.render().to_string()).report(),
    };
    let name = cli.command.name();
    let result = cli.command.run().and_then(|outcome| {
        output::emit(
            name,
            &outcome,
            cli.format,
            cli.output.as_deref(),
            cli.out_dir.as_deref(),
        )?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) if outcome.pass() => ExitCode::SUCCESS,
        Ok(outcome) => CliError::Assertion(outcome.failed_checks()).report(),
        Err(e) => e.report(),
    }
}
