//! Command-line arguments. Every argument struct is serializable so that the
//! resolved configuration can be echoed in output headers.

use clap::{Args, Parser, Subcommand, ValueEnum};
use espider::chain::SwitchKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "espider",
    version,
    about = "Multi-type Ehrenfest chain on a star graph and its OU spider limit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Resolved configuration of one run, embedded in every output header.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Time-dependent level probabilities, generating function or Laplace transform.
    Transient(TransientArgs),
    /// Stationary law, its large-N approximation, moments and limits.
    Stationary(StationaryArgs),
    /// Entropy of the stationary law and its maximizer over rho.
    Entropy(EntropyArgs),
    /// Monte Carlo estimates of p(k, t).
    Simulate(SimulateArgs),
    /// Diffusion limit: density, moments, SDE histograms, Fokker-Planck snapshots.
    Diffusion(DiffusionArgs),
    /// Published comparison tables.
    Compare(CompareArgs),
    /// Acceptance criteria; exits 1 if any fails.
    Check(CheckArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "N", default_value_t = 3)]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value = "uniform")]
    pub switch: SwitchKind,
    /// Step probability of the random-walk scheme.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Closed form when lambda = mu, oracle otherwise.
    Auto,
    Closed,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TransientArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub t: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    /// Evaluate the generating function F(z, t) at these z instead.
    #[arg(long, value_delimiter = ',')]
    pub z: Vec<f64>,
    /// Evaluate the Laplace transform H(eta) at these eta instead.
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct StationaryArgs {
    /// Ratio lambda / mu; overrides --lambda and --mu.
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long = "N", value_delimiter = ',', default_value = "3")]
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    /// Levels to report; all levels when omitted.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Report mean, variance and CV instead of the law.
    #[arg(long)]
    pub moments: bool,
    /// Report the large-N limits of the moments instead of the law.
    #[arg(long, conflicts_with = "moments")]
    pub limits: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EntropyArgs {
    #[arg(long = "N", value_delimiter = ',', default_value = "2,4,6,8,10,15,20,30")]
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    /// Report the maximizing rho per N instead of the curves.
    #[arg(long)]
    pub argmax: bool,
    /// Explicit rho values for the curves.
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub runs: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Start level (0 is the origin).
    #[arg(long, default_value_t = 0)]
    pub init_level: usize,
    /// Start ray, or last ray when starting at the origin.
    #[arg(long, default_value_t = 1)]
    pub init_ray: usize,
    /// Tabulate by ray as well as by level.
    #[arg(long)]
    pub by_ray: bool,
    /// Also write a JSON campaign manifest here.
    #[arg(long)]
    pub manifest: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DiffusionArgs {
    #[command(subcommand)]
    pub mode: DiffusionMode,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScalingArgs {
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Sets nu = N epsilon^2; overrides --nu.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DiffusionMode {
    /// Stationary density `x,w`.
    Density {
        #[command(flatten)]
        scaling: ScalingArgs,
        /// Right end of the grid; ten spreads past the mode by default.
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Mean and variance of the distance from the vertex.
    Moments {
        #[command(flatten)]
        scaling: ScalingArgs,
    },
    /// SDE histogram `x_bin,count,ray`.
    Sde {
        #[command(flatten)]
        scaling: ScalingArgs,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value = "uniform")]
        switch: SwitchKind,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1000.0)]
        horizon: f64,
        #[arg(long, default_value_t = 5.0)]
        burn_in: f64,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 8)]
        chains: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Fokker-Planck snapshots `t,x,h` from a Gaussian bump.
    Fp {
        #[command(flatten)]
        scaling: ScalingArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,1,5")]
        t: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 2000)]
        cells: usize,
        #[arg(long)]
        x_max: Option<f64>,
        /// Centre of the initial bump.
        #[arg(long, default_value_t = 3.0)]
        bump_at: f64,
        #[arg(long, default_value_t = 0.1)]
        bump_width: f64,
        /// Forward Euler instead of backward Euler.
        #[arg(long)]
        explicit: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    Table1,
    Table2,
    Table3,
    Moments,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Published,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[arg(value_enum)]
    pub table: Table,
    /// Use the published parameter grid.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Compare against the published cells and exit 1 on any miss.
    #[arg(long, requires = "preset")]
    pub check: bool,
    #[arg(long = "N", value_delimiter = ',', default_value = "100")]
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub rho: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("espider").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn config_round_trips_through_json() {
        for args in [
            &[
                "simulate", "--N", "5", "--d", "3", "--switch", "cyclic", "--t", "1,2", "--seed", "9",
            ][..],
            &["diffusion", "sde", "--alpha", "1.5", "--chains", "4"],
            &["compare", "table1", "--preset", "published", "--check"],
            &["stationary", "--rho", "0.5,2", "--moments"],
        ] {
            let cmd = parse(args).command;
            let text = serde_json::to_string(&cmd).unwrap();
            let back: Command = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cmd, "{text}");
        }
    }

    #[test]
    fn check_flag_needs_a_preset() {
        assert!(Cli::try_parse_from(["espider", "compare", "table1", "--check"]).is_err());
    }
}
