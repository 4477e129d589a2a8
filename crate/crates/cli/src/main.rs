//! `fifonet`: validate networks, compute equilibria, simulate, and certify
//! regions of attraction from the command line.
//!
//! JSON goes to stdout and logs to stderr. Exit codes: 0 success, 1 domain
//! refusal or failure, 2 input error.

mod commands;
mod manifest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;

/// Comma-separated list of numbers, e.g. `8` or `15,7.5,7.5`.
#[derive(Clone, Debug, PartialEq)]
pub struct Floats(pub Vec<f64>);

impl FromStr for Floats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
            .collect::<Result<Vec<_>, _>>()
            .map(Floats)
    }
}

#[derive(Parser, Debug)]
#[command(name = "fifonet", version, about = "Dynamic flow networks with FIFO junctions")]
struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct SignalArgs {
    /// Constant input per entry link.
    #[arg(long = "u", visible_alias = "u-const")]
    pub u: Option<Floats>,
    /// Periodic schedule JSON: {"period": T, "segments": [{"start": s, "u": [..]}]}.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Euler,
    Rk4,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    /// FIFO dynamics.
    F,
    /// Monotone extension.
    H,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CertMethodArg {
    /// `y` (default `x^e(ubar)`) must satisfy `F(y, ubar) <= 0`.
    VectorField,
    /// `y` is produced by the monotone-flow iteration.
    Iteration,
    /// `y` is given with `--y` and checked by simulation only.
    UserSupplied,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub network: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
    /// Initial densities (default: empty network).
    #[arg(long)]
    pub x0: Option<Floats>,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum, default_value = "rk4")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "f")]
    pub field: FieldArg,
    /// Write every n-th grid point.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    pub network: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
    /// Upper bound the invariant point is computed for (default: the
    /// signal's upper bound).
    #[arg(long)]
    pub ubar: Option<Floats>,
    #[arg(long, value_enum, default_value = "vector-field")]
    pub method: CertMethodArg,
    #[arg(long)]
    pub y: Option<Floats>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Horizon for simulation checks of the invariant point.
    #[arg(long, default_value_t = 500.0)]
    pub horizon: f64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub margin_tol: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub network: PathBuf,
    #[arg(long)]
    pub cert: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500.0)]
    pub horizon: f64,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Defaults to the step recorded in the certificate.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PeriodicArgs {
    pub network: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    pub network: PathBuf,
    #[arg(long)]
    pub point: Floats,
    #[arg(long)]
    pub u: Floats,
    #[arg(long)]
    pub margin_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the modelling assumptions on a network file.
    Validate { network: PathBuf },
    /// Free-flow equilibrium for a constant input.
    Equilibrium {
        network: PathBuf,
        #[arg(long)]
        u: Floats,
    },
    /// Integrate the dynamics and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Certify a box [0, y] as a region of attraction.
    Certify(CertifyArgs),
    /// Sample the box of a certificate and check convergence to its attractor.
    VerifyRoa(VerifyArgs),
    /// Find the periodic orbit for a periodic schedule.
    Periodic(PeriodicArgs),
    /// Residual and domain classification of a state.
    Audit(AuditArgs),
}

fn run(cli: Cli) -> Result<commands::Report, Failure> {
    match cli.command {
        Command::Validate { network } => commands::validate(&network),
        Command::Equilibrium { network, u } => commands::equilibrium(&network, &u.0),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Certify(args) => commands::certify(&args),
        Command::VerifyRoa(args) => commands::verify_roa(&args),
        Command::Periodic(args) => commands::periodic(&args),
        Command::Audit(args) => commands::audit(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report.json).expect("report serializes");
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::from(report.code)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
