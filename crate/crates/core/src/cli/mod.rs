//! The `barronpde` command line.
//!
//! Exit codes: 0 success (certified / (A3') holds), 2 best-effort only ((A3) without (A3')),
//! 3 diverged, 4 precondition or construction failure, 64 usage or schema error, 1 I/O,
//! resource exhaustion or a failed oracle gate.

mod commands;
mod manifest;

pub use commands::{sidecar_path, DerivativeCheck, DimCsvRow, NormCheck, ProductCheck, RateCsvRow};
pub use manifest::{digest_inputs, to_pretty, Envelope, RunManifest};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::oracle::ResidualMode;
use crate::solver::SolveMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BEST_EFFORT: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// A failed command: exit code plus a message for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "barronpde", version, about = "Certified Barron-space elliptic solver and cosine-network extraction")]
pub struct Cli {
    /// Seed for every random choice (residual points, network sampling, sweeps).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, env = "BARRONPDE_THREADS")]
    pub threads: Option<usize>,
    /// Upper limit on atoms in any intermediate product.
    #[arg(long, global = true)]
    pub atom_cap: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the smallness assumptions and print every derived constant.
    Validate {
        problem: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a problem file, writing the solution atoms and the iteration report.
    Solve(SolveArgs),
    /// Sample a two-layer cosine network from a solution.
    Extract(ExtractArgs),
    /// Network error against width, optionally repeated over problems of several dimensions.
    Sweep(SweepArgs),
    /// Build the perturbation that breaks ellipticity while its norm stays moderate.
    Counterexample {
        #[arg(long)]
        eps: f64,
        /// Lattice step on every axis.
        #[arg(long)]
        hmin: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Independent pointwise checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub problem: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Share of `tol` that pruning may consume.
    #[arg(long)]
    pub prune_frac: Option<f64>,
    #[arg(long)]
    pub residual_points: Option<usize>,
    /// Solution atom map.
    #[arg(long)]
    pub out: PathBuf,
    /// Iteration report.
    #[arg(long)]
    pub report: PathBuf,
    /// Wall-clock sidecar, kept apart so the report stays byte-stable.
    #[arg(long)]
    pub timing: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("width").required(true).args(["n", "eps"]))]
pub struct ExtractArgs {
    pub solution: PathBuf,
    /// Sobolev order of the sampling weights.
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub n: Option<usize>,
    /// Target accuracy; the width then follows from the neuron bound.
    #[arg(long, requires_all = ["c", "vol", "fnorm"])]
    pub eps: Option<f64>,
    #[arg(long = "C", id = "c", value_name = "C")]
    pub c: Option<f64>,
    #[arg(long)]
    pub vol: Option<f64>,
    #[arg(long)]
    pub fnorm: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub problem: PathBuf,
    /// Comma-separated network widths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Replicates per width.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    /// `LO,HI`, applied on every axis.
    #[arg(long = "box", value_delimiter = ',', num_args = 2, default_values_t = [0.0, 1.0])]
    pub bx: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long)]
    pub out_csv: PathBuf,
    /// Further problem files; the whole pipeline runs on each and a dimension table is written.
    #[arg(long, num_args = 1.., requires = "dims_csv")]
    pub dims: Vec<PathBuf>,
    #[arg(long)]
    pub dims_csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Pointwise residual `|L u − f|` of a solution.
    Residual {
        problem: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, value_enum, default_value_t = ResidualArg::Analytic)]
        mode: ResidualArg,
        #[arg(long)]
        max_residual: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convolution product against pointwise multiplication, plus the norm inequality.
    Product {
        g: PathBuf,
        h: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        max_error: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral first derivatives against central differences.
    Derivative {
        g: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Gate relative to `‖g‖_{B^3}`.
        #[arg(long, default_value_t = 1e-6)]
        max_error: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Combined,
    Nested,
}

impl From<ModeArg> for SolveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Combined => SolveMode::Combined,
            ModeArg::Nested => SolveMode::Nested,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ResidualArg {
    Analytic,
    FiniteDifference,
}

impl From<ResidualArg> for ResidualMode {
    fn from(m: ResidualArg) -> Self {
        match m {
            ResidualArg::Analytic => ResidualMode::Analytic,
            ResidualArg::FiniteDifference => ResidualMode::FiniteDifference,
        }
    }
}

/// Entry point of the binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Parse `args` (program name first), execute, report on stdout/stderr and return the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

/// Run a parsed command inside a pool of the requested size.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::new(EXIT_USAGE, "--threads must be positive"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot start worker threads: {e}")))?;
    pool.install(|| commands::dispatch(cli))
}
