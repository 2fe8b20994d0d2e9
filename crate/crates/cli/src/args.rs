//! Command-line flags and their translation into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pottslab::inference::{Approximation, MarginAnchor, SteppingConfig};
use pottslab::sampler::{ChainConfig, InitState, SamplerKind, SiteUpdate, SwapRule};
use pottslab::scenario::builtin_scenario;
use pottslab::tapering::{TauRoute, TauSearchConfig};
use pottslab::Boundary;
use serde::de::DeserializeOwned;

use crate::config::*;

/// Parses a lowercase enum name through its serde representation.
fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .or_else(|_| serde_json::from_value(serde_json::Value::String(s.to_string())))
        .map_err(|_| format!("unknown value `{s}`"))
}

#[derive(Debug, Parser)]
#[command(name = "pottslab", version, about = "Classical and tapered Potts models for categorical lattices")]
pub struct Cli {
    /// Replay a manifest.json written by an earlier run (no subcommand).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Simulate draws and write statistics, plot data and optional grids.
    Sample(SampleArgs),
    /// Pseudo-likelihood start, then Monte Carlo maximum likelihood.
    Fit(FitArgs),
    /// Fit the classical model and decide whether tapering is needed.
    Diagnose(DiagnoseArgs),
    /// Search for the smallest acceptable tapering weight.
    ChooseTau(ChooseTauArgs),
    /// Generate a benchmark grid from a Gaussian-field scenario.
    Scenario(ScenarioArgs),
    /// Print the sufficient statistics of a grid file.
    Stats(StatsArgs),
    /// Enumerate a tiny lattice exactly.
    Exact(ExactArgs),
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long, default_value_t = 30)]
    pub width: usize,
    #[arg(long, default_value_t = 30)]
    pub height: usize,
    #[arg(long, short = 'k', default_value_t = 4)]
    pub colors: usize,
    #[arg(long, default_value = "periodic")]
    pub boundary: Boundary,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Fields of colors 1..K-1 (color K is the reference); zero by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// classical or tapered.
    #[arg(long, default_value = "classical")]
    pub model: String,
    /// Common tapering weight.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Tapering center for colors 1..K-1.
    #[arg(long, value_delimiter = ',')]
    pub center: Option<Vec<f64>>,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, String> {
        match self.model.as_str() {
            "classical" => {
                if self.tau.is_some() {
                    return Err("--tau needs --model tapered".into());
                }
                Ok(ModelSpec::Classical)
            }
            "tapered" => Ok(ModelSpec::Tapered {
                tau: self.tau.ok_or("--model tapered needs --tau")?,
                center: self.center.clone(),
            }),
            m => Err(format!("unknown model `{m}` (classical|tapered)")),
        }
    }
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Retained draws per batch.
    #[arg(long, default_value_t = 500)]
    pub draws: usize,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thinning: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// greedy or metropolis.
    #[arg(long, default_value = "metropolis", value_parser = parse_enum::<SwapRule>)]
    pub swap_rule: SwapRule,
    /// monochrome or random.
    #[arg(long, default_value = "monochrome", value_parser = parse_enum::<InitState>)]
    pub init: InitState,
    /// heat-bath or metropolis single-site update.
    #[arg(long, default_value = "heat-bath", value_parser = parse_enum::<SiteUpdate>)]
    pub site_update: SiteUpdate,
    /// gibbs or swendsen-wang.
    #[arg(long, default_value = "gibbs", value_parser = parse_enum::<SamplerKind>)]
    pub sampler: SamplerKind,
}

impl ChainArgs {
    fn chain(&self, keep_grids: bool) -> ChainConfig {
        ChainConfig {
            sample_size: self.draws,
            burn_in: self.burn_in,
            thinning: self.thinning,
            seed: 0,
            keep_grids,
            chains: self.chains,
            swap_rule: self.swap_rule,
            init: self.init,
            site_update: self.site_update,
        }
    }
}

#[derive(Debug, Args)]
pub struct SteppingArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value_t = 50)]
    pub max_iterations: usize,
    /// Draws for the final polish and the moment check.
    #[arg(long, default_value_t = 1000)]
    pub final_draws: usize,
    /// cumulant or naive.
    #[arg(long, default_value = "cumulant", value_parser = parse_enum::<Approximation>)]
    pub approx: Approximation,
    /// interpolated or mean.
    #[arg(long, default_value = "interpolated", value_parser = parse_enum::<MarginAnchor>)]
    pub margin_anchor: MarginAnchor,
    #[arg(long, default_value_t = 1e-3)]
    pub gamma_min: f64,
}

impl SteppingArgs {
    fn stepping(&self) -> SteppingConfig {
        let mut cfg = SteppingConfig {
            max_iterations: self.max_iterations,
            batch: self.chain.chain(false),
            sampler: self.chain.sampler,
            approx: self.approx,
            final_sample_size: self.final_draws,
            ..SteppingConfig::default()
        };
        cfg.gamma.anchor = self.margin_anchor;
        cfg.gamma.gamma_min = self.gamma_min;
        cfg
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Sweep over several interaction values (boxplot data).
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Also write every retained configuration.
    #[arg(long)]
    pub keep_grids: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub stepping: SteppingArgs,
    #[arg(long, default_value_t = default_threshold())]
    pub proportion_ratio: f64,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[command(flatten)]
    pub stepping: SteppingArgs,
    #[arg(long, default_value_t = default_threshold())]
    pub proportion_ratio: f64,
}

#[derive(Debug, Args)]
pub struct ChooseTauArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[command(flatten)]
    pub stepping: SteppingArgs,
    #[arg(long, default_value_t = 0.002)]
    pub tau_init: f64,
    #[arg(long, default_value_t = 0.9)]
    pub shrink: f64,
    #[arg(long, default_value_t = 30)]
    pub max_steps: usize,
    /// auto, bimodality or convergence.
    #[arg(long, default_value = "auto", value_parser = parse_enum::<TauRoute>)]
    pub route: TauRoute,
    #[arg(long, default_value_t = default_threshold())]
    pub proportion_ratio: f64,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Built-in preset 1..6; other flags override its fields.
    #[arg(long)]
    pub preset: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<f64>>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub nugget: Option<f64>,
    #[arg(long)]
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub grid: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, default_value_t = 3)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub height: usize,
    #[arg(long, short = 'k', default_value_t = 2)]
    pub colors: usize,
    #[arg(long, default_value = "free")]
    pub boundary: Boundary,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = pottslab::exact::DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
}

impl Sub {
    /// The manifest equivalent of these flags.
    pub fn into_config(self, seed: u64) -> Result<RunConfig, String> {
        let command = match self {
            Sub::Sample(a) => Command::Sample(SampleSpec {
                width: a.lattice.width,
                height: a.lattice.height,
                colors: a.lattice.colors,
                boundary: a.lattice.boundary,
                alpha: a.params.alpha,
                beta: a.params.beta,
                betas: a.betas,
                model: a.model.spec()?,
                sampler: a.chain.sampler,
                chain: a.chain.chain(a.keep_grids),
            }),
            Sub::Fit(a) => Command::Fit(FitSpec {
                grid: a.grid,
                model: a.model.spec()?,
                stepping: a.stepping.stepping(),
                proportion_ratio_threshold: a.proportion_ratio,
            }),
            Sub::Diagnose(a) => Command::Diagnose(DiagnoseSpec {
                grid: a.grid,
                stepping: a.stepping.stepping(),
                proportion_ratio_threshold: a.proportion_ratio,
            }),
            Sub::ChooseTau(a) => Command::ChooseTau(ChooseTauSpec {
                grid: a.grid,
                stepping: a.stepping.stepping(),
                search: TauSearchConfig {
                    tau_init: a.tau_init,
                    shrink: a.shrink,
                    max_steps: a.max_steps,
                    route: a.route,
                    proportion_ratio_threshold: a.proportion_ratio,
                },
            }),
            Sub::Scenario(a) => {
                let preset = a.preset.unwrap_or(1);
                let mut config = builtin_scenario(preset).map_err(|e| e.to_string())?;
                if let Some(v) = a.width {
                    config.width = v;
                }
                if let Some(v) = a.height {
                    config.height = v;
                }
                if let Some(v) = a.mu {
                    config.num_classes = v.len();
                    config.mu = v;
                }
                if let Some(v) = a.length {
                    config.length = v;
                }
                if let Some(v) = a.gamma {
                    config.gamma = v;
                }
                if let Some(v) = a.nugget {
                    config.nugget = v;
                }
                if let Some(v) = a.boundary {
                    config.boundary = v;
                }
                Command::Scenario(ScenarioSpec { preset: Some(preset), config })
            }
            Sub::Stats(a) => Command::Stats(StatsSpec { grid: a.grid }),
            Sub::Exact(a) => Command::Exact(ExactSpec {
                width: a.width,
                height: a.height,
                colors: a.colors,
                boundary: a.boundary,
                alpha: a.params.alpha,
                beta: a.params.beta,
                model: a.model.spec()?,
                cap: a.cap,
            }),
        };
        Ok(RunConfig { seed, command })
    }
}
