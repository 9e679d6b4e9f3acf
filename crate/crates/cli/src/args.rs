use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ftg_core::fit::Family;
use ftg_core::sample::SamplerMethod;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "ftg", version, about = "Fit, simulate and test full-tails gamma loss models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Maximum-likelihood fits with standard errors.
    Fit(FitArgs),
    /// Draw a random sample from a fully specified law.
    Sample(SampleArgs),
    /// Simulate compound-Poisson annual losses and their risk capital.
    Risk(RiskArgs),
    /// Goodness-of-fit statistics and p-values.
    Gof(GofArgs),
    /// Columns for survival or log-binned density plots.
    Plotdata(PlotArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Sample(_) => "sample",
            Command::Risk(_) => "risk",
            Command::Gof(_) => "gof",
            Command::Plotdata(_) => "plotdata",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Write JSON instead of text.
    #[arg(long)]
    pub json: bool,
    /// Write the output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Write the run manifest here. Defaults to `<out>.manifest.json`, or
    /// stderr when writing to stdout.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Loss file: one number per line, or CSV with an optional header.
    #[arg(required_unless_present = "bundled", conflicts_with = "bundled")]
    pub data: Option<PathBuf>,
    /// Use the bundled external-fraud losses.
    #[arg(long)]
    pub bundled: bool,
    /// CSV column, by header name or zero-based index.
    #[arg(long)]
    pub column: Option<String>,
    /// Keep the excesses over this threshold, rescaled to `--target-mean`.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 100.0, requires = "threshold")]
    pub target_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFamily {
    Ftg,
    Pareto,
    Gamma,
    /// All three families and the likelihood ratio test of Pareto against FTG.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Ftg,
    Pareto,
    Gamma,
}

impl From<ModelFamily> for Family {
    fn from(f: ModelFamily) -> Self {
        match f {
            ModelFamily::Ftg => Family::Ftg,
            ModelFamily::Pareto => Family::Pareto,
            ModelFamily::Gamma => Family::Gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    Rejection,
    Envelope,
}

impl From<Method> for SamplerMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Auto => SamplerMethod::Auto,
            Method::Rejection => SamplerMethod::Rejection,
            Method::Envelope => SamplerMethod::Envelope,
        }
    }
}

/// A law given by `α` and either the rate `θ` or the dispersion `σ = ρ/θ`.
/// `ρ = 0` selects the gamma law (with `θ`) or the Pareto law (with `σ`).
#[derive(Debug, Clone, Args, Serialize)]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, conflicts_with = "sigma")]
    pub theta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = FitFamily::All)]
    pub family: FitFamily,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Number of draws.
    #[arg(short, long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    /// Random seed; generated and reported when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct RiskArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = ModelFamily::Ftg)]
    pub family: ModelFamily,
    /// Expected number of losses per year.
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Quantile level of the risk capital.
    #[arg(long, default_value_t = 0.999)]
    pub level: f64,
    /// Simulated years.
    #[arg(long, default_value_t = 100_000)]
    pub sims: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run a bootstrap stability study with this many resamples, fitting
    /// both the Pareto and FTG laws to each.
    #[arg(long, value_name = "N")]
    pub bootstrap: Option<usize>,
    /// Keep every K-th resample after ordering by the Pareto shape.
    #[arg(long, value_name = "K", default_value_t = 1, requires = "bootstrap")]
    pub keep_every: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GofArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Family fitted to the data, with bootstrap p-values.
    #[arg(long, value_enum, default_value_t = ModelFamily::Ftg)]
    pub family: ModelFamily,
    /// Test against this fully specified law instead of a fitted one.
    #[command(flatten)]
    pub params: ParamArgs,
    /// Parametric bootstrap replicates.
    #[arg(long, default_value_t = 999)]
    pub bootstrap: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotMode {
    Survival,
    Histogram,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = PlotMode::Survival)]
    pub mode: PlotMode,
    /// Histogram bins per decade.
    #[arg(long, default_value_t = 5)]
    pub bins_per_decade: u32,
    /// Histogram grid origin: points sit at 10^(origin + k/bins).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub decade_origin: f64,
    /// Use the tropical-cyclone binning (origin 8, five bins per decade).
    #[arg(long, conflicts_with_all = ["bins_per_decade", "decade_origin"])]
    pub cyclone_preset: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}
