//! Command-line front end.
//!
//! Machine output (CSV or JSON) goes to `--out` or stdout; diagnostics go to
//! stderr. Exit codes: 0 success, 1 a verification failed, 2 bad input.

mod commands;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bodies::{DEFAULT_MC_SAMPLES, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::report::EQUALITY_GAP_TOL;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GRUNBAUM_LAB_THREADS";

/// Label attached to every violation.
pub const VIOLATION_LABEL: &str = "numeric/model bug suspected";

#[derive(Debug, Parser)]
#[command(name = "grunbaum-lab", version, about = "Sharp barycentric cut bounds and their numerical verification")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every Monte Carlo stream; recorded in each report row.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = DEFAULT_MC_SAMPLES)]
    pub mc_samples: u64,
    /// Verdict tolerance; looser than the default only with --force.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Accept a --tol looser than the default.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a sharp bound.
    Bound(BoundArgs),
    /// Verify cuts of bodies or line measures given as JSON.
    Verify(VerifyArgs),
    /// Build an equality-case body and check it.
    Extremal(ExtremalArgs),
    /// Tabulate the family with no positive bound.
    Counterexample(CounterexampleArgs),
    /// Tabulate bound curves.
    Sweep(SweepArgs),
    /// Search for the direction with the smallest barycentric side.
    OptimizeDirection(OptimizeArgs),
    /// One-dimensional transport maps.
    #[command(subcommand)]
    Transport(TransportCmd),
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// lebesgue, gaussian or sconcave.
    #[arg(long)]
    pub class: String,
    /// Dimension (lebesgue, or sconcave with --p).
    #[arg(long)]
    pub n: Option<usize>,
    /// Mass of the set being cut (gaussian).
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Concavity exponent (sconcave).
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Density exponent; with --n gives C(n, p) (sconcave).
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON file, or inline JSON starting with `{` or `[`.
    pub input: String,
    /// Bodies: lebesgue[:n], gaussian, sconcave:s. Line measures: cdf, transport, sconcave:s.
    #[arg(long, default_value = "lebesgue")]
    pub class: String,
    /// Comma-separated cut normal; default is every coordinate axis.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    /// Force the Monte Carlo path.
    #[arg(long)]
    pub monte_carlo: bool,
}

#[derive(Debug, Args)]
pub struct ExtremalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub s: f64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub r1: f64,
    /// Apex offset for s < 0.
    #[arg(long = "big-r", allow_hyphen_values = true)]
    pub big_r: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub half_width: f64,
    /// Comma-separated generator direction.
    #[arg(long, allow_hyphen_values = true)]
    pub skew: Option<String>,
    /// Check with the Monte Carlo sampler instead of quadrature.
    #[arg(long)]
    pub monte_carlo: bool,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    /// Comma-separated k values; default 10, 100, ..., 10^6.
    #[arg(long)]
    pub k: Option<String>,
    /// Fail unless the last left mass is below this.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// gaussian (grid over t) or sconcave (grid over s).
    #[arg(long, default_value = "gaussian")]
    pub class: String,
    /// `lo:hi:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Extra s values tabulated as constant columns next to the t grid.
    #[arg(long, allow_hyphen_values = true)]
    pub s_list: Option<String>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub input: String,
    #[arg(long, default_value = "lebesgue")]
    pub class: String,
}

#[derive(Debug, Subcommand)]
pub enum TransportCmd {
    /// Monge–Ampère residual of a map and the measure it defines.
    Residual {
        /// Map JSON: {"kind": "linear" | "lambert" | "custom-table", ...}.
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 801)]
        points: usize,
    },
    /// Transport cut bound on an interval.
    Verify {
        /// Density JSON.
        #[arg(long)]
        measure: String,
        #[arg(long, default_value_t = f64::NEG_INFINITY, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, default_value_t = f64::INFINITY, allow_hyphen_values = true)]
        b: f64,
    },
    /// Whether the transport map is convex.
    Concavity {
        #[arg(long)]
        measure: String,
    },
    /// Linearity test of an even measure's transport map.
    EvenTest {
        #[arg(long)]
        measure: String,
    },
}

/// Run settings shared by the subcommands.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub seed: u64,
    pub mc_samples: u64,
    /// Gap tolerance used for equality and violation verdicts.
    pub tol: f64,
}

impl RunConfig {
    /// Rejects a tolerance looser than the default unless forced.
    pub fn from_opts(g: &GlobalOpts) -> Result<Self> {
        let tol = match g.tol {
            None => EQUALITY_GAP_TOL,
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(Error::InvalidArgument(format!("--tol {t} must be positive and finite")));
            }
            Some(t) if t > EQUALITY_GAP_TOL && !g.force => {
                return Err(Error::InvalidArgument(format!(
                    "--tol {t} is looser than the default {EQUALITY_GAP_TOL:e}; pass --force to accept"
                )));
            }
            Some(t) => t,
        };
        if g.mc_samples == 0 {
            return Err(Error::InvalidArgument("--mc-samples must be positive".into()));
        }
        Ok(RunConfig {
            seed: g.seed,
            mc_samples: g.mc_samples,
            tol,
        })
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// A check failed; the message goes to stderr.
    Fail(String),
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, stdout, stderr),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(stderr, "{e}");
            code
        }
    }
}

/// Runs a parsed command; returns the exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = RunConfig::from_opts(&cli.global).and_then(|cfg| {
        let mut buf = Vec::new();
        let outcome = commands::dispatch(&cli.command, &cfg, &mut buf, stderr)?;
        match &cli.global.out {
            Some(path) => {
                let mut f = BufWriter::new(File::create(path)?);
                f.write_all(&buf)?;
                f.flush()?;
            }
            None => stdout.write_all(&buf)?,
        }
        Ok(outcome)
    });
    match result {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail(msg)) => {
            let _ = writeln!(stderr, "FAIL: {msg}");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV}={v} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
