//! Run manifests: everything needed to repeat a command exactly.

use std::path::PathBuf;

use pottslab::inference::SteppingConfig;
use pottslab::sampler::{ChainConfig, SamplerKind};
use pottslab::scenario::ScenarioConfig;
use pottslab::tapering::{TauSearchConfig, DEFAULT_PROPORTION_RATIO};
use pottslab::Boundary;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    Classical,
    /// Common weight `tau`; `center` defaults to the observed counts when
    /// fitting and to `M/K` per color when sampling.
    Tapered {
        tau: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub width: usize,
    pub height: usize,
    pub colors: usize,
    pub boundary: Boundary,
    pub alpha: Vec<f64>,
    pub beta: f64,
    /// When set, one batch per value; `beta` is ignored.
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    pub model: ModelSpec,
    pub sampler: SamplerKind,
    pub chain: ChainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub grid: PathBuf,
    pub model: ModelSpec,
    pub stepping: SteppingConfig,
    pub proportion_ratio_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseSpec {
    pub grid: PathBuf,
    pub stepping: SteppingConfig,
    pub proportion_ratio_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChooseTauSpec {
    pub grid: PathBuf,
    pub stepping: SteppingConfig,
    pub search: TauSearchConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Preset number the config was taken from, if any.
    #[serde(default)]
    pub preset: Option<usize>,
    pub config: ScenarioConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSpec {
    pub grid: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSpec {
    pub width: usize,
    pub height: usize,
    pub colors: usize,
    pub boundary: Boundary,
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub model: ModelSpec,
    pub cap: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    Sample(SampleSpec),
    Fit(FitSpec),
    Diagnose(DiagnoseSpec),
    ChooseTau(ChooseTauSpec),
    Scenario(ScenarioSpec),
    Stats(StatsSpec),
    Exact(ExactSpec),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Fit(_) => "fit",
            Command::Diagnose(_) => "diagnose",
            Command::ChooseTau(_) => "choose-tau",
            Command::Scenario(_) => "scenario",
            Command::Stats(_) => "stats",
            Command::Exact(_) => "exact",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub command: Command,
}

impl RunConfig {
    /// Copies the top-level seed into every nested seed so the manifest has a
    /// single source of truth.
    pub fn normalized(mut self) -> Self {
        let seed = self.seed;
        match &mut self.command {
            Command::Sample(s) => s.chain.seed = seed,
            Command::Fit(f) => f.stepping.batch.seed = seed,
            Command::Diagnose(d) => d.stepping.batch.seed = seed,
            Command::ChooseTau(c) => c.stepping.batch.seed = seed,
            Command::Scenario(s) => s.config.seed = seed,
            Command::Stats(_) | Command::Exact(_) => {}
        }
        self
    }
}

pub fn default_threshold() -> f64 {
    DEFAULT_PROPORTION_RATIO
}
