use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbdesign::DesignKind;

#[derive(Debug, Parser)]
#[command(name = "fbdesign", version, about = "Forced-balance experimental designs and their MSE criteria")]
pub struct Cli {
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Crfb,
    Pb,
    Pm,
}

impl From<Kind> for DesignKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Crfb => DesignKind::Crfb,
            Kind::Pb => DesignKind::Pb,
            Kind::Pm => DesignKind::Pm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CModeArg {
    Chebyshev,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FModeArg {
    Identity,
    Zero,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every forced-balance allocation of n subjects.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a design for a covariate file and print its allocation covariance.
    Design(DesignArgs),
    /// Mean, variance and tail criteria of a design.
    Criteria(CriteriaArgs),
    /// The paired adversarial example: closed forms next to enumeration.
    Toy {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Run a simulation scenario.
    Simulate(SimulateArgs),
    /// Histogram densities from a saved simulation result.
    Export {
        #[arg(long)]
        result: PathBuf,
        #[arg(long, default_value_t = fbdesign::sim::DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Covariates, CSV or JSON by extension.
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, value_enum)]
    pub design: Kind,
    /// Needed when perfect balance falls back to greedy search.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CriteriaArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, value_enum)]
    pub design: Kind,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_z: f64,
    #[arg(long, value_enum, default_value_t = CModeArg::Gaussian)]
    pub c_mode: CModeArg,
    #[arg(long, default_value_t = 0.95)]
    pub q: f64,
    /// `identity` uses the first covariate column as f.
    #[arg(long, value_enum, default_value_t = FModeArg::Identity)]
    pub f_mode: FModeArg,
    /// Also estimate the q-quantile from this many Gaussian noise draws.
    #[arg(long)]
    pub mc_draws: Option<usize>,
    /// Per-draw MSE values (draw_index, mse) for the Monte Carlo estimate.
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub restarts: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<String>,
    /// Scenario configuration as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for result.json, density.csv, summary.txt and per-design samples.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n_z: Option<usize>,
    #[arg(long)]
    pub n_w: Option<usize>,
    /// Greedy restarts for perfect balance.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub imbalance_ceiling: Option<f64>,
    /// Exact per-draw MSE instead of sampled allocations.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = fbdesign::sim::DEFAULT_BINS)]
    pub bins: usize,
    /// Print the per-design summary table.
    #[arg(long)]
    pub summary: bool,
}
