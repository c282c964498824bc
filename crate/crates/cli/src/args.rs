use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tlid_core::divisibility::SD_TOL;
use tlid_core::processes::{DEFAULT_BURN_IN, DEFAULT_HORIZON};
use tlid_core::series::DEFAULT_ORDER;

pub const THREADS_ENV: &str = "TLID_THREADS";

/// Taylor's law, divisibility checks and process simulation for
/// infinitely divisible two-parameter families.
#[derive(Debug, Parser)]
#[command(name = "tlid", version, args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file whose entries act as defaults for the
    /// subcommand's flags.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for simulation (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean, variance and Taylor's-law exponent of one family member.
    Moments(MomentsArgs),
    /// Exponent along a one-parameter slice, as CSV.
    Curve(CurveArgs),
    /// Self-decomposability oracle.
    SdCheck(SdCheckArgs),
    /// Simulate a process and summarize its terminal law.
    Simulate(SimulateArgs),
    /// Fit `log sigma2 = a + b log mu` by least squares.
    Fit(FitArgs),
}

pub const SUBCOMMANDS: [&str; 5] = ["moments", "curve", "sd-check", "simulate", "fit"];

#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyArgs {
    /// tweble, negbin, cpgeo, polya-aeppli or gamma.
    #[arg(long)]
    pub family: String,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Alternative to `--p` (`p = 1 - q`).
    #[arg(long, conflicts_with = "p")]
    pub q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurveArgs {
    /// Family; the remaining flags fix the non-swept parameter
    /// (`--theta` as |theta| for tweble, `--alpha` for the discrete families,
    /// `--beta` for gamma).
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Start of the sweep over the free parameter (alpha for tweble and
    /// gamma, p for negbin, q for cpgeo and polya-aeppli).
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Write CSV here (plus `<out>.manifest.json`) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SdCheckArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = SD_TOL)]
    pub tol: f64,
    /// Upper end of the lambda grid for the tweble analysis.
    #[arg(long, default_value_t = 20.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 201)]
    pub lambda_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    DisasterChain,
    DeathImmigration,
    OuGamma,
    TwebleOu,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub process: Process,
    /// Required: simulations never draw entropy implicitly.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    /// Continuous-time horizon.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: f64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0)]
    pub steps: usize,
    /// Increment rate (disaster chain), driver rate (ou-gamma) or TweBLE index.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Survival probability of the disaster chain.
    #[arg(long)]
    pub p: Option<f64>,
    /// Exponential jump mean of the ou-gamma driver.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Cluster arrival rate.
    #[arg(long)]
    pub r: Option<f64>,
    /// Cluster-size law: `geometric:P`, `logarithmic:P`, `shifted-poisson:M`
    /// or `pmf:h1,h2,...` (masses of sizes 1, 2, ...).
    #[arg(long)]
    pub cluster: Option<String>,
    /// Truncation order of cluster and limit pgfs.
    #[arg(long, default_value_t = 256)]
    pub order: usize,
    /// Jump cutoff of the tweble-ou driver.
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Write terminal samples as CSV (plus `<path>.manifest.json`).
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// CSV with `mu` and `sigma2` columns.
    #[arg(long, conflicts_with = "family")]
    pub input: Option<PathBuf>,
    /// Generate exact-moment points instead: fix one parameter of the family
    /// and sweep the other over `--from..--to`.
    #[arg(long, requires_all = ["from", "to"])]
    pub family: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sweep range of whichever parameter is not fixed.
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Rescale every point by this variance before fitting.
    #[arg(long)]
    pub sigma1sq: Option<f64>,
}
