//! Command-line surface for the KDQ bound library: scenario runners, bound
//! and crossing-time computations on user-supplied operators, parameter
//! sweeps, and the verification suite.
//!
//! Exit codes: 0 success, 1 verification-suite failures, 2 input contract
//! violation, 3 no result (e.g. negativity absent where requested).

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod input;

use commands::{
    cmd_bounds, cmd_qsl_times, cmd_sweep, cmd_two_qubit, cmd_verify, BoundsParams, GridSpec,
    QslTimesParams, SweepParams, TwoQubitParams, VerifyParams,
};
use config::{resolve, FileConfig};

/// How a command failed, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Invalid configuration or input files violating an operator invariant.
    Contract(String),
    /// Verification checks ran but some failed.
    ChecksFailed(String),
    /// The computation ran but produced no usable result.
    NoResult(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct CommonOpts {
    /// Reduced Planck constant (natural units by default).
    #[arg(long)]
    hbar: Option<f64>,
    /// Threshold for the imaginary-part non-classicality criterion.
    #[arg(long)]
    s_th: Option<f64>,
    /// End of the time grid.
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    steps: Option<usize>,
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "kdqsl",
    about = "Kirkwood-Dirac quasiprobability bounds, crossing times and two-qubit work extraction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-qubit controlled-unitary gate: trajectory+bounds CSV for the
    /// (1,1) pair and the interaction-strength sweep CSV.
    TwoQubit {
        #[command(flatten)]
        common: CommonOpts,
        /// Local level splitting of both qubits.
        #[arg(long)]
        omega_l: Option<f64>,
        /// Controlled-rotation interaction strength.
        #[arg(long)]
        omega_int: Option<f64>,
        /// Output directory for the two CSV files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Smallest omega_int of the sweep.
        #[arg(long)]
        sweep_min: Option<f64>,
        /// Largest omega_int of the sweep.
        #[arg(long)]
        sweep_max: Option<f64>,
        /// Number of sweep rows.
        #[arg(long)]
        sweep_points: Option<usize>,
    },
    /// Bounds and crossing times for user-supplied rho, A, B, H matrices
    /// (JSON with dim/re/im fields).
    Bounds {
        #[command(flatten)]
        common: CommonOpts,
        /// Density operator file.
        #[arg(long)]
        rho: PathBuf,
        /// First observable file (measured at t = 0).
        #[arg(long)]
        a: PathBuf,
        /// Second observable file (Heisenberg-evolved).
        #[arg(long)]
        b: PathBuf,
        /// Hamiltonian file.
        #[arg(long = "h-op", visible_alias = "hamiltonian")]
        h: PathBuf,
        /// Output directory for bounds.csv and times.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crossing-time report only, as JSON (default) or CSV.
    QslTimes {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long = "h-op", visible_alias = "hamiltonian")]
        h: PathBuf,
        /// Report format.
        #[arg(long)]
        format: Option<OutputFormat>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded property suite; nonzero exit on any failure.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Base seed of the sweep.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of seeded instances per check.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        dim_min: Option<usize>,
        #[arg(long)]
        dim_max: Option<usize>,
    },
    /// Interaction-strength sweep CSV on its own.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        omega_l: Option<f64>,
        #[arg(long)]
        sweep_min: Option<f64>,
        #[arg(long)]
        sweep_max: Option<f64>,
        #[arg(long)]
        sweep_points: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> Result<(), Failure> {
    let cli = Cli::parse();
    match cli.command {
        Command::TwoQubit {
            common,
            omega_l,
            omega_int,
            out,
            sweep_min,
            sweep_max,
            sweep_points,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let params = TwoQubitParams {
                omega_l: resolve(omega_l, file.f64("omega_l")?, 1.0),
                omega_int: resolve(omega_int, file.f64("omega_int")?, 5.0),
                s_th: resolve(common.s_th, file.f64("s_th")?, 0.2),
                grid: GridSpec {
                    t_max: resolve(common.t_max, file.f64("t_max")?, PI),
                    steps: resolve(common.steps, file.usize("steps")?, 400),
                },
                hbar: resolve(common.hbar, file.f64("hbar")?, 1.0),
                out_dir: resolve(
                    out,
                    file.string("out").map(PathBuf::from),
                    PathBuf::from("."),
                ),
                sweep_min: resolve(sweep_min, file.f64("sweep_min")?, 0.2),
                sweep_max: resolve(sweep_max, file.f64("sweep_max")?, 10.0),
                sweep_points: resolve(sweep_points, file.usize("sweep_points")?, 50),
            };
            cmd_two_qubit(&params)
        }
        Command::Bounds {
            common,
            rho,
            a,
            b,
            h,
            out,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let params = BoundsParams {
                rho,
                a,
                b,
                h,
                s_th: resolve(common.s_th, file.f64("s_th")?, 0.2),
                grid: GridSpec {
                    t_max: resolve(common.t_max, file.f64("t_max")?, PI),
                    steps: resolve(common.steps, file.usize("steps")?, 400),
                },
                hbar: resolve(common.hbar, file.f64("hbar")?, 1.0),
                out_dir: resolve(
                    out,
                    file.string("out").map(PathBuf::from),
                    PathBuf::from("."),
                ),
            };
            cmd_bounds(&params)
        }
        Command::QslTimes {
            common,
            rho,
            a,
            b,
            h,
            format,
            out,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let format_file = match file.string("format").as_deref() {
                Some("csv") => Some(OutputFormat::Csv),
                Some("json") => Some(OutputFormat::Json),
                Some(other) => {
                    return Err(Failure::Contract(format!(
                        "config key format has invalid value {other:?}"
                    )))
                }
                None => None,
            };
            let params = QslTimesParams {
                rho,
                a,
                b,
                h,
                s_th: resolve(common.s_th, file.f64("s_th")?, 0.2),
                hbar: resolve(common.hbar, file.f64("hbar")?, 1.0),
                format: resolve(format, format_file, OutputFormat::Json),
                out: out.or_else(|| file.string("out").map(PathBuf::from)),
            };
            cmd_qsl_times(&params)
        }
        Command::Verify {
            common,
            seed,
            seeds,
            dim_min,
            dim_max,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let params = VerifyParams {
                base_seed: resolve(seed, file.u64("seed")?, 1),
                seeds: resolve(seeds, file.usize("seeds")?, 200),
                dim_min: resolve(dim_min, file.usize("dim_min")?, 2),
                dim_max: resolve(dim_max, file.usize("dim_max")?, 6),
                hbar: resolve(common.hbar, file.f64("hbar")?, 1.0),
            };
            cmd_verify(&params)
        }
        Command::Sweep {
            common,
            omega_l,
            sweep_min,
            sweep_max,
            sweep_points,
            out,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let params = SweepParams {
                omega_l: resolve(omega_l, file.f64("omega_l")?, 1.0),
                hbar: resolve(common.hbar, file.f64("hbar")?, 1.0),
                sweep_min: resolve(sweep_min, file.f64("sweep_min")?, 0.2),
                sweep_max: resolve(sweep_max, file.f64("sweep_max")?, 10.0),
                sweep_points: resolve(sweep_points, file.usize("sweep_points")?, 50),
                out: out.or_else(|| file.string("out").map(PathBuf::from)),
            };
            cmd_sweep(&params)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ChecksFailed(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Contract(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NoResult(msg)) => {
            eprintln!("no result: {msg}");
            ExitCode::from(3)
        }
    }
}
