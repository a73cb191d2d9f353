//! `vw3d`: command-line front end for the vw3d-core engines.
//!
//! JSON output (`--format json`) is the stable contract; text output is for people.
//! Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 nonzero closure
//! residual under `--strict`.

mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use report::{Failure, Outcome};

#[derive(Parser, Debug)]
#[command(
    name = "vw3d",
    version,
    about = "Graded dimensions, partition functions and BRST checks for Vafa-Witten theory"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    /// Truncation order for series output.
    #[arg(long, global = true, env = "VW3D_ORDER", default_value_t = 20)]
    order: i64,
    /// Root-finding tolerance (normalized backward residual).
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bethe roots, S-matrix elements and the equivariant Verlinde sum.
    Verlinde(VerlindeArgs),
    /// Seeded sweep of the Bethe pipeline and the genus-0/1 Verlinde identities.
    Sweep(SweepArgs),
    /// Closed-form graded dimension near x = t = 1 against its leading asymptotics.
    Asymptotics(AsymptoticsArgs),
    /// Coefficients of G(q) = 1/eta(q)^24.
    Gseries,
    /// Vafa-Witten partition function of the elliptic surface E(n).
    Elliptic(EllipticArgs),
    /// Graded dimensions of Floer-type spaces.
    Floer(FloerArgs),
    /// Closure of BRST transformation tables on constant fields.
    Brst(BrstArgs),
}

#[derive(Args, Debug)]
pub struct VerlindeArgs {
    /// Genus of Sigma_g in Sigma_g x S^1.
    #[arg(long, default_value_t = 0)]
    pub g: u32,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Expand the closed form as a series instead of evaluating at a point.
    #[arg(long, conflicts_with_all = ["x", "y", "t", "limit"])]
    pub series: bool,
    /// Manifold for --series: S3, S2xS1 or Sigma<g> (default Sigma<g> from --g).
    #[arg(long, requires = "series")]
    pub manifold: Option<String>,
    /// Specialize to the limit regime R0 (x, y -> 0) or R2 (y, t -> 0).
    #[arg(long, value_enum, conflicts_with_all = ["x", "y", "t"])]
    pub limit: Option<Regime>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "verbatim")]
pub enum Regime {
    R0,
    R2,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Number of random points in (0.05, 0.95)^3.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample on the slice y = x and compare with the two-variable closed form.
    #[arg(long)]
    pub diagonal: bool,
}

#[derive(Args, Debug)]
pub struct AsymptoticsArgs {
    #[arg(long, default_value_t = 2)]
    pub g: u32,
    /// Direction of approach in x: x = 1 + a eps.
    #[arg(long, allow_negative_numbers = true, default_value_t = -2.0)]
    pub a: f64,
    /// Direction of approach in t: t = 1 + b eps.
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
    pub b: f64,
    /// Step sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
    pub eps: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct EllipticArgs {
    /// n for E(n); must be even and at least 2.
    #[arg(long)]
    pub n: i64,
    /// Compare with the multiplicative gluing prediction (n >= 6).
    #[arg(long)]
    pub gluing: bool,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("mode").required(true).args(["hf", "ranks", "hn", "molien", "superspace", "brieskorn"])))]
pub struct FloerArgs {
    /// HF+ of S2xS1, L(p,1) or Sigma<g>xS1 (with --h).
    #[arg(long)]
    pub hf: Option<String>,
    /// Spin-c label h for Sigma<g>xS1.
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<i64>,
    /// Compare HF+ ranks of Sigma_g x S^1 with brute-force counts for g = 1..=G and all h.
    #[arg(long, value_name = "G")]
    pub ranks: Option<u32>,
    /// Harder-Narasimhan Poincare polynomials for the listed genera.
    #[arg(long, value_delimiter = ',', value_name = "G,...")]
    pub hn: Option<Vec<u32>>,
    /// Molien series of invariant polynomials on su(2).
    #[arg(long)]
    pub molien: bool,
    /// Character of the abelian superspace model at genus G.
    #[arg(long, value_name = "G", requires = "second_odd")]
    pub superspace: Option<u32>,
    /// Weight of the second odd factor, e.g. `t`, `x*t` or `1`.
    #[arg(long)]
    pub second_odd: Option<String>,
    /// Reference data for a Brieskorn sphere (P, Sigma237).
    #[arg(long)]
    pub brieskorn: Option<String>,
}

#[derive(Args, Debug)]
pub struct BrstArgs {
    /// Built-in table (abelian, brst, covariant, allq) or a table file.
    #[arg(long)]
    pub table: String,
    /// Run only the named check.
    #[arg(long)]
    pub check: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random constant-field states.
    #[arg(long, default_value_t = 10)]
    pub states: usize,
    /// Report the table as written without searching sign conventions.
    #[arg(long)]
    pub no_calibrate: bool,
    /// Square s1 Q^1 + s2 Q^2 + r1 Qbar^1 + r2 Qbar^2, given as s1,s2,r1,r2.
    #[arg(long, value_delimiter = ',', num_args = 1, value_name = "S1,S2,R1,R2", allow_negative_numbers = true)]
    pub twistor: Option<Vec<String>>,
    /// Gauge-parameter candidates for --twistor.
    #[arg(long, value_delimiter = ';', default_value = "phi^{11};phi^{12};phi^{22};rho")]
    pub candidates: Vec<String>,
    /// Exit with status 4 when any residual is nonzero.
    #[arg(long)]
    pub strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verlinde(a) => report::verlinde(a, cli.order, cli.tol),
        Command::Sweep(a) => report::sweep(a, cli.tol),
        Command::Asymptotics(a) => report::asymptotics(a),
        Command::Gseries => report::gseries(cli.order),
        Command::Elliptic(a) => report::elliptic(a, cli.order),
        Command::Floer(a) => report::floer(a, cli.order),
        Command::Brst(a) => report::brst(a),
    };
    match result {
        Ok(Outcome { json, text, code }) => {
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(&json).expect("reports serialize") + "\n",
                Format::Text => text,
            };
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(body.as_bytes());
            ExitCode::from(code)
        }
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
