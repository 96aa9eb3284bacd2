mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tsrk_core::design::DEFAULT_EPS;
use tsrk_core::problems::BurgersProfile;
use tsrk_core::Error;

use config::StageChoice;

#[derive(Parser)]
#[command(name = "tsrk", version, about = "Design, analyse and run stabilized two-step Runge-Kutta methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the damping system and write the method coefficients as JSON.
    Genmethod {
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Output file; JSON goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error constants and stability lengths for a list of stage counts (CSV).
    Table {
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Comma-separated stage counts.
        #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "2,5,10,20,50,100,200,500,1000")]
        s: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Real-axis scan or complex-plane stability mask (CSV).
    Stability(StabilityArgs),
    /// Constant-step integrations over a list of step sizes (CSV).
    Run(RunArgs),
    /// `run` over h0, h0/2, ... with error ratios.
    Convergence(RunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    RealScan,
    Domain,
}

#[derive(Args)]
struct StabilityArgs {
    /// Method JSON written by `genmethod`.
    #[arg(long, conflicts_with_all = ["s", "undamped"])]
    method: Option<PathBuf>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Use the undamped pair `1 + T_s(1 + mu/s^2)`, `-T_s(1 + mu/s^2)`.
    #[arg(long, requires = "s")]
    undamped: bool,
    #[arg(long, value_enum, default_value = "real-scan")]
    mode: Mode,
    /// Left end of the real scan; defaults to 1.05 times the stability length.
    #[arg(long, allow_hyphen_values = true)]
    mu_min: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Left edge of the domain grid; defaults to 1.05 times the stability length.
    #[arg(long, allow_hyphen_values = true)]
    re_min: Option<f64>,
    /// Right edge of the domain grid; defaults to 0.04 |re_min|.
    #[arg(long, allow_hyphen_values = true)]
    re_max: Option<f64>,
    #[arg(long)]
    im_max: Option<f64>,
    #[arg(long, default_value_t = 400)]
    resolution: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Advection {
    Conservative,
    Nonconservative,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of vdpol, rober, hires, burgers, heat1d.
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    #[arg(long, conflicts_with = "h")]
    h0: Option<f64>,
    #[arg(long)]
    halvings: Option<usize>,
    /// Stage count, or `auto` to pick the smallest stable one per step size.
    #[arg(long)]
    s: Option<StageChoice>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Implicit sub-steps used to compute the starting value y_1.
    #[arg(long)]
    substeps: Option<usize>,
    /// Interior grid points for burgers and heat1d.
    #[arg(long)]
    grid: Option<usize>,
    /// Initial profile for burgers.
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long, value_enum)]
    advection: Option<Advection>,
    /// Skip the Richardson check of the reference solution.
    #[arg(long)]
    no_certify: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Polynomial,
    SinCubed,
}

impl From<ProfileArg> for BurgersProfile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Polynomial => BurgersProfile::Polynomial,
            ProfileArg::SinCubed => BurgersProfile::SinCubed,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parameter(_) | Error::Domain(_) => 2,
        Error::Certification { .. } => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Genmethod { s, eps, out } => commands::genmethod(s, eps, out.as_deref()),
        Command::Table { eps, s, out } => commands::table(eps, &s, out.as_deref()),
        Command::Stability(args) => commands::stability(&args),
        Command::Run(args) => commands::run(&args, 0),
        Command::Convergence(args) => commands::run(&args, 1),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
