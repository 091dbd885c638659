use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use replica_es::error::{exit, RunError};
use replica_es::geometry::{BoundaryOptions, CurveSpec};
use replica_es::io::{execute, Command, CurveRequest, FigureId, Format, RunConfig};
use replica_es::mc::MCConfig;
use replica_es::saddle::ProblemParams;

/// Replica solution of l2-regularized Expected Shortfall optimization, curve
/// tracing and Monte Carlo checks. Log verbosity is read from REPLICA_ES_LOG.
#[derive(Parser)]
#[command(name = "replica-es", version)]
struct Cli {
    /// Output file (directory for `figure`); stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Seed for Monte Carlo sampling.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: number of processors).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the replica equations at one point.
    Solve {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Trace a curve in parameter space.
    Curve {
        #[command(subcommand)]
        kind: CurveCmd,
    },
    /// Monte Carlo estimates from finite instances.
    Mc {
        #[arg(long)]
        n_assets: usize,
        #[arg(long)]
        n_obs: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Probe field amplitude for the susceptibility.
        #[arg(long, default_value_t = 1e-6)]
        shift_xi: f64,
        /// Add replica values and z-scores.
        #[arg(long)]
        compare: bool,
    },
    /// Write the data behind one figure into a directory.
    Figure {
        /// fig1 .. fig8
        id: String,
    },
}

#[derive(Args)]
struct Steps {
    #[arg(long, default_value_t = 1e-7)]
    min_step: f64,
    #[arg(long, default_value_t = 0.1)]
    max_step: f64,
}

#[derive(Args)]
struct AlphaRange {
    #[arg(long, default_value_t = 0.6)]
    alpha_min: f64,
    #[arg(long, default_value_t = 0.995)]
    alpha_max: f64,
}

#[derive(Subcommand)]
enum CurveCmd {
    /// Level set of sqrt(q0) in the (alpha, r) plane.
    IsoQ0 {
        #[arg(long)]
        level: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[command(flatten)]
        range: AlphaRange,
        #[command(flatten)]
        steps: Steps,
    },
    /// Level set of the susceptibility in the (alpha, r) plane.
    IsoDelta {
        #[arg(long)]
        level: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[command(flatten)]
        range: AlphaRange,
        #[command(flatten)]
        steps: Steps,
    },
    /// r as a function of eta at fixed alpha and sqrt(q0).
    ROfEta {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        level: f64,
        #[arg(long, default_value_t = 1e-4)]
        eta_min: f64,
        #[arg(long, default_value_t = 10.0)]
        eta_max: f64,
        #[command(flatten)]
        steps: Steps,
    },
    /// Phase boundary at eta = 0.
    PhaseBoundary {
        #[command(flatten)]
        range: AlphaRange,
    },
}

fn request(kind: CurveCmd) -> CurveRequest {
    let level = |spec: CurveSpec, s: Steps| CurveRequest::Level { spec: spec.with_steps(s.min_step, s.max_step) };
    match kind {
        CurveCmd::IsoQ0 { level: l, eta, range, steps } => {
            level(CurveSpec::iso_q0(l, eta, (range.alpha_min, range.alpha_max)), steps)
        }
        CurveCmd::IsoDelta { level: l, eta, range, steps } => {
            level(CurveSpec::iso_delta(l, eta, (range.alpha_min, range.alpha_max)), steps)
        }
        CurveCmd::ROfEta { alpha, level: l, eta_min, eta_max, steps } => {
            level(CurveSpec::r_of_eta(alpha, l, (eta_min, eta_max)), steps)
        }
        CurveCmd::PhaseBoundary { range } => CurveRequest::Boundary {
            alpha_range: (range.alpha_min, range.alpha_max),
            options: BoundaryOptions::default(),
        },
    }
}

fn config(cli: Cli) -> Result<RunConfig, RunError> {
    let command = match cli.command {
        Cmd::Solve { alpha, r, eta } => Command::Solve { params: ProblemParams::new(alpha, r, eta)? },
        Cmd::Curve { kind } => Command::Curve { request: request(kind) },
        Cmd::Mc { n_assets, n_obs, alpha, eta, samples, shift_xi, compare } => {
            let mut c = MCConfig::new(n_assets, n_obs, alpha, eta, samples, cli.seed);
            c.shift_xi = shift_xi;
            Command::Mc { config: c, compare }
        }
        Cmd::Figure { id } => Command::Figure { id: id.parse::<FigureId>().map_err(RunError::Usage)? },
    };
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    Ok(RunConfig { command, output: cli.output, format })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("REPLICA_ES_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("replica-es: {e}");
            return ExitCode::from(exit::USAGE as u8);
        }
    }
    let code = match config(cli).and_then(|cfg| execute(&cfg, &mut std::io::stdout().lock())) {
        Ok(outcome) => {
            if !outcome.truncated.is_empty() {
                eprintln!("replica-es: truncated: {}", outcome.truncated.join(", "));
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("replica-es: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
